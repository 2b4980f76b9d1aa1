"""Per-column objective, its quadratic upper bound and the bound's curvature.

For one data column ``x`` and fixed basis ``A`` the sparse coding objective is

    F(s) = 1/2 ||x - A s||^2 + lam * sum(s)

The multiplicative update minimizes the surrogate

    G(s, st) = F(st) + (s - st)^T grad F(st) + 1/2 (s - st)^T K(st) (s - st)

with diagonal ``K(st)_aa = ((A^T A st)_a + lam) / st_a``. Because
``K(st) - A^T A`` is positive semidefinite, G lies above F and touches it at
``s = st``. The helpers here make each piece computable so those facts can
be checked numerically.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .densemat import Matrix, ShapeError

__all__ = [
    "ColumnSubproblem",
    "f_col",
    "grad_f",
    "k_diag",
    "g_aux",
    "argmin_g",
    "symmetric_eigenvalues",
    "min_eig_k_minus_ata",
]


def _as_array(v, ndim: int) -> np.ndarray:
    arr = np.asarray(v.values if isinstance(v, Matrix) else v, dtype=np.float64)
    if ndim == 1:
        arr = arr.reshape(-1)
    if arr.ndim != ndim:
        raise ShapeError(f"expected a {ndim}-D array, got shape {arr.shape}")
    return arr


@dataclass(frozen=True)
class ColumnSubproblem:
    """Basis ``a`` (m x r), one data column ``x`` (length m) and weight ``lam``."""

    a: np.ndarray
    x: np.ndarray
    lam: float = 0.0

    def __post_init__(self):
        a = _as_array(self.a, 2)
        x = _as_array(self.x, 1)
        if a.shape[0] != x.shape[0]:
            raise ShapeError(f"basis has {a.shape[0]} rows but column has length {x.shape[0]}")
        if np.any(a < 0) or np.any(x < 0):
            raise ValueError("basis and data column must be non-negative")
        if not self.lam >= 0:
            raise ValueError(f"lam must be >= 0, got {self.lam}")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "lam", float(self.lam))

    @classmethod
    def from_column(cls, x: Matrix, a: Matrix, lam: float, j: int) -> "ColumnSubproblem":
        return cls(a.values, x.values[:, j], lam)

    @property
    def r(self) -> int:
        return self.a.shape[1]

    def _vec(self, s) -> np.ndarray:
        s = _as_array(s, 1)
        if s.shape[0] != self.r:
            raise ShapeError(f"expected a vector of length {self.r}, got {s.shape[0]}")
        return s


def f_col(sp: ColumnSubproblem, s) -> float:
    s = sp._vec(s)
    res = sp.x - sp.a @ s
    return 0.5 * float(res @ res) + sp.lam * float(np.sum(s))


def grad_f(sp: ColumnSubproblem, s) -> np.ndarray:
    """``A^T (A s - x) + lam``."""
    s = sp._vec(s)
    return sp.a.T @ (sp.a @ s - sp.x) + sp.lam


def k_diag(sp: ColumnSubproblem, s_t) -> np.ndarray:
    """Diagonal of the surrogate curvature at the (strictly positive) point ``s_t``."""
    s_t = sp._vec(s_t)
    if np.any(s_t <= 0):
        bad = int(np.flatnonzero(s_t <= 0)[0])
        raise ValueError(f"s_t must be strictly positive; entry {bad} is {s_t[bad]!r}")
    return (sp.a.T @ (sp.a @ s_t) + sp.lam) / s_t


def g_aux(sp: ColumnSubproblem, s, s_t) -> float:
    s = sp._vec(s)
    s_t = sp._vec(s_t)
    k = k_diag(sp, s_t)
    d = s - s_t
    return f_col(sp, s_t) + float(d @ grad_f(sp, s_t)) + 0.5 * float(d @ (k * d))


def argmin_g(sp: ColumnSubproblem, s_t) -> np.ndarray:
    """Stationary point of ``G(., s_t)``: ``s_t - K^{-1} grad F(s_t)``."""
    s_t = sp._vec(s_t)
    return s_t - grad_f(sp, s_t) / k_diag(sp, s_t)


def symmetric_eigenvalues(m, tol: float = 1e-15, max_sweeps: int = 100) -> np.ndarray:
    """Eigenvalues of a small symmetric matrix by cyclic Jacobi rotations.

    Returned in ascending order.
    """
    a = np.array(_as_array(m, 2), dtype=np.float64)
    n = a.shape[0]
    if a.shape != (n, n):
        raise ShapeError(f"matrix must be square, got {a.shape}")
    if not np.allclose(a, a.T, rtol=0, atol=1e-12 * max(1.0, np.abs(a).max())):
        raise ValueError("matrix is not symmetric")
    a = 0.5 * (a + a.T)
    scale = max(np.abs(a).max(), np.finfo(float).tiny)
    for _ in range(max_sweeps):
        off = np.sqrt(np.sum(np.tril(a, -1) ** 2))
        if off <= tol * scale:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if apq == 0.0:
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                t = np.sign(theta) / (abs(theta) + np.sqrt(theta * theta + 1.0)) if theta != 0 else 1.0
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                rot = np.eye(n)
                rot[p, p] = rot[q, q] = c
                rot[p, q] = s
                rot[q, p] = -s
                a = rot.T @ a @ rot
    return np.sort(np.diag(a))


def min_eig_k_minus_ata(sp: ColumnSubproblem, s_t) -> float:
    """Smallest eigenvalue of ``diag(K(s_t)) - A^T A``; nonnegative in theory."""
    m = np.diag(k_diag(sp, s_t)) - sp.a.T @ sp.a
    return float(symmetric_eigenvalues(m)[0])
