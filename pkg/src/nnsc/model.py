"""Problem and factorization state, objectives and constraint audits."""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .densemat import Matrix, ShapeError

__all__ = [
    "Mode",
    "Problem",
    "Factorization",
    "Violation",
    "DEFAULT_TOL",
    "objective_nnsc",
    "objective_nmf",
    "validate",
    "max_violation",
]

DEFAULT_TOL = 1e-9


class Mode(str, enum.Enum):
    NNSC = "nnsc"
    NMF = "nmf"


@dataclass(frozen=True)
class Problem:
    """Non-negative data ``x`` (one sample per column) and sparseness weight."""

    x: Matrix
    lam: float = 0.0

    def __post_init__(self):
        if not isinstance(self.x, Matrix):
            object.__setattr__(self, "x", Matrix(self.x))
        lam = float(self.lam)
        if not np.isfinite(lam) or lam < 0:
            raise ValueError(f"lambda must be a finite value >= 0, got {self.lam}")
        object.__setattr__(self, "lam", lam)
        neg = np.argwhere(self.x.values < 0)
        if neg.size:
            i, j = neg[0]
            raise ValueError(
                f"data must be non-negative; x[{i},{j}] = {self.x.values[i, j]!r} "
                f"({len(neg)} negative entries)"
            )


@dataclass(frozen=True)
class Factorization:
    """Basis ``a`` (m x r) and hidden components ``s`` (r x n)."""

    a: Matrix
    s: Matrix

    def __post_init__(self):
        if not isinstance(self.a, Matrix):
            object.__setattr__(self, "a", Matrix(self.a))
        if not isinstance(self.s, Matrix):
            object.__setattr__(self, "s", Matrix(self.s))
        if self.a.cols != self.s.rows:
            raise ShapeError(f"basis is {self.a.shape} but components are {self.s.shape}")

    @property
    def rank(self) -> int:
        return self.a.cols


@dataclass(frozen=True)
class Violation:
    kind: str  # "negative_a", "negative_s" or "unit_norm"
    index: tuple[int, ...]
    magnitude: float

    def __str__(self) -> str:
        where = ",".join(str(i) for i in self.index)
        return f"{self.kind}[{where}]: {self.magnitude:.3g}"


def _check_shapes(p: Problem, f: Factorization) -> None:
    m, n = p.x.shape
    if f.a.rows != m or f.s.cols != n:
        raise ShapeError(
            f"factorization {f.a.shape} x {f.s.shape} does not match data {p.x.shape}"
        )


def _residual_sq(x: np.ndarray, a: np.ndarray, s: np.ndarray) -> float:
    r = x - a @ s
    return float(np.sum(r * r))


def objective_nmf(p: Problem, f: Factorization) -> float:
    """Half the squared reconstruction error."""
    _check_shapes(p, f)
    return 0.5 * _residual_sq(p.x.values, f.a.values, f.s.values)


def objective_nnsc(p: Problem, f: Factorization) -> float:
    """Reconstruction error plus ``lam`` times the sum of all components."""
    _check_shapes(p, f)
    return 0.5 * _residual_sq(p.x.values, f.a.values, f.s.values) + p.lam * float(np.sum(f.s.values))


def validate(p: Problem, f: Factorization, mode: Mode = Mode.NNSC, tol: float = DEFAULT_TOL) -> list[Violation]:
    """List every constraint violation larger than ``tol``.

    Non-negativity of ``a`` and ``s`` is checked in both modes; unit-norm
    basis columns only in NNSC mode. Shape mismatches are reported as a
    ``shape`` violation rather than raised.
    """
    mode = Mode(mode)
    out: list[Violation] = []
    m, n = p.x.shape
    if f.a.rows != m or f.s.cols != n:
        out.append(Violation("shape", (f.a.rows, f.s.cols), float("nan")))
        return out
    for kind, mat in (("negative_a", f.a.values), ("negative_s", f.s.values)):
        for i, j in np.argwhere(mat < -tol):
            out.append(Violation(kind, (int(i), int(j)), float(-mat[i, j])))
    if mode is Mode.NNSC:
        norms = np.sqrt(np.sum(f.a.values ** 2, axis=0))
        for j in np.flatnonzero(np.abs(norms - 1.0) > tol):
            out.append(Violation("unit_norm", (int(j),), float(abs(norms[j] - 1.0))))
    return out


def max_violation(f: Factorization, mode: Mode = Mode.NNSC) -> float:
    """Largest constraint violation magnitude (0 for a feasible state)."""
    worst = max(0.0, -float(f.a.values.min()), -float(f.s.values.min()))
    if Mode(mode) is Mode.NNSC:
        norms = np.sqrt(np.sum(f.a.values ** 2, axis=0))
        worst = max(worst, float(np.max(np.abs(norms - 1.0))))
    return worst
