"""Alternating solvers for non-negative sparse coding and plain NMF.

The hidden components are updated with the multiplicative rule

    S <- S .* (A^T X) ./ (A^T A S + lam)

which never increases the sparse coding objective. The basis is updated by a
projected gradient step (descend, clamp negatives, renormalize columns) with
backtracking on the step size, so the objective trace of :func:`nnsc_fit` is
nonincreasing. :func:`nmf_fit` uses the classic Lee-Seung updates for both
factors.
"""

from __future__ import annotations

import csv
import io
import logging
import math
import os
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .densemat import Matrix, MatrixError, ShapeError, ZeroColumnError
from .model import Factorization, Mode, Problem

__all__ = [
    "SolverConfig",
    "TraceRecord",
    "Trace",
    "update_s",
    "update_a_projected",
    "update_a_multiplicative",
    "initialize",
    "restart_seeds",
    "nnsc_fit",
    "nmf_fit",
    "fit",
]

log = logging.getLogger(__name__)

INIT_LOW = 0.1
INIT_HIGH = 1.1
_TINY = np.finfo(np.float64).tiny


@dataclass(frozen=True)
class SolverConfig:
    """Knobs for the alternating solvers.

    ``lam`` overrides the problem's sparseness weight when given. ``mu`` is
    the initial basis step size; with ``backtracking`` a rejected step is
    halved up to ``max_halvings`` times, and an accepted one grows by
    ``mu_growth`` for the next iteration, never beyond ``mu_cap`` times the
    initial value. Iteration stops after ``max_iters`` outer iterations or
    once the relative objective change stays below ``tol`` for
    ``patience`` consecutive iterations. ``restarts`` independent random
    starts are run and the one with the lowest final objective is kept.
    """

    mode: Mode = Mode.NNSC
    lam: Optional[float] = None
    mu: float = 1e-2
    max_iters: int = 5000
    tol: float = 1e-9
    eps_div: float = 1e-12
    seed: int = 0
    backtracking: bool = True
    patience: int = 5
    max_halvings: int = 20
    mu_growth: float = 1.2
    mu_cap: float = 10.0
    restarts: int = 1

    def __post_init__(self):
        object.__setattr__(self, "mode", Mode(self.mode))
        if self.lam is not None and not (self.lam >= 0 and math.isfinite(self.lam)):
            raise ValueError(f"lam must be >= 0, got {self.lam}")
        for name in ("mu", "tol", "eps_div"):
            v = getattr(self, name)
            if not (v > 0 and math.isfinite(v)):
                raise ValueError(f"{name} must be > 0, got {v}")
        if int(self.max_iters) < 1:
            raise ValueError(f"max_iters must be >= 1, got {self.max_iters}")
        if int(self.patience) < 1:
            raise ValueError(f"patience must be >= 1, got {self.patience}")
        if int(self.restarts) < 1:
            raise ValueError(f"restarts must be >= 1, got {self.restarts}")


@dataclass(frozen=True)
class TraceRecord:
    iter: int
    objective: float
    max_violation: float
    mu: float


@dataclass
class Trace:
    """Per-iteration history of a fit. Record 0 is the initial state."""

    seed: int
    records: list[TraceRecord] = field(default_factory=list)
    converged: bool = False
    restart: int = 0

    @property
    def iterations(self) -> int:
        return len(self.records) - 1

    @property
    def objectives(self) -> np.ndarray:
        return np.array([r.objective for r in self.records])

    @property
    def final_objective(self) -> float:
        return self.records[-1].objective

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["iter", "objective", "max_violation", "mu"])
        for r in self.records:
            w.writerow([r.iter, f"{r.objective:.16e}", f"{r.max_violation:.16e}", f"{r.mu:.16e}"])
        return buf.getvalue()

    def write_csv(self, path: str | os.PathLike) -> None:
        with open(path, "w", newline="") as fh:
            fh.write(self.to_csv())

    @classmethod
    def read_csv(cls, path: str | os.PathLike, seed: int = 0) -> "Trace":
        with open(path, newline="") as fh:
            rows = list(csv.DictReader(fh))
        recs = [
            TraceRecord(int(r["iter"]), float(r["objective"]), float(r["max_violation"]), float(r["mu"]))
            for r in rows
        ]
        return cls(seed=seed, records=recs)


# numpy kernels; the public wrappers below check shapes and wrap results.

def _update_s(x, a, s, lam, eps_div):
    num = a.T @ x
    den = a.T @ (a @ s) + lam
    # Guard only where the denominator underflows, so ordinary entries are
    # bitwise identical to the unguarded rule.
    np.maximum(den, eps_div, out=den)
    out = s * num / den
    if not np.all(np.isfinite(out)):
        raise MatrixError("S update produced non-finite values; check eps_div")
    # Entries shrinking toward zero eventually go subnormal, which makes every
    # later product an order of magnitude slower. Flush them to zero.
    out[out < _TINY] = 0.0
    return out


def _gradient_step_a(x, a, s, mu):
    return a - mu * ((a @ s - x) @ s.T)


def _normalize(a):
    norms = np.sqrt(np.sum(a * a, axis=0))
    zero = np.flatnonzero(norms == 0.0)
    if zero.size:
        raise ZeroColumnError(int(zero[0]))
    return a / norms


def _project_a(x, a, s, mu):
    return _normalize(np.maximum(_gradient_step_a(x, a, s, mu), 0.0))


def _update_a_mult(x, a, s, eps_div):
    den = a @ (s @ s.T)
    np.maximum(den, eps_div, out=den)
    return a * (x @ s.T) / den


def _objective(x, a, s, lam):
    r = x - a @ s
    return 0.5 * float(np.sum(r * r)) + lam * float(np.sum(s))


def _check_triplet(x: Matrix, a: Matrix, s: Matrix) -> None:
    if a.rows != x.rows or s.cols != x.cols or a.cols != s.rows:
        raise ShapeError(f"incompatible shapes: x {x.shape}, a {a.shape}, s {s.shape}")


def update_s(x: Matrix, a: Matrix, s: Matrix, lam: float, eps_div: float = 1e-12) -> Matrix:
    """One multiplicative update of the hidden components.

    Parameters
    ----------
    x : Matrix
        Non-negative data, m x n.
    a : Matrix
        Non-negative basis, m x r.
    s : Matrix
        Current non-negative components, r x n.
    lam : float
        Sparseness weight, added to every denominator entry.
    eps_div : float
        Lower bound applied to the denominator.

    Returns
    -------
    Matrix
        The updated r x n components. Entries that start at zero stay zero.
    """
    _check_triplet(x, a, s)
    return Matrix._wrap(_update_s(x.values, a.values, s.values, float(lam), eps_div))


def update_a_projected(x: Matrix, a: Matrix, s: Matrix, mu: float) -> Matrix:
    """Gradient step on the basis, then clamp negatives and renormalize columns.

    Raises :class:`~nnsc.densemat.ZeroColumnError` if a column is entirely
    clamped away.
    """
    _check_triplet(x, a, s)
    return Matrix._wrap(_project_a(x.values, a.values, s.values, float(mu)))


def update_a_multiplicative(x: Matrix, a: Matrix, s: Matrix, eps_div: float = 1e-12) -> Matrix:
    """Lee-Seung basis update ``A .* (X S^T) ./ (A S S^T)``."""
    _check_triplet(x, a, s)
    return Matrix._wrap(_update_a_mult(x.values, a.values, s.values, eps_div))


def _draw(rng, shape):
    return rng.uniform(INIT_LOW, INIT_HIGH, size=shape)


def initialize(m: int, r: int, n: int, seed) -> tuple[np.ndarray, np.ndarray, np.random.Generator]:
    """Strictly positive random start with unit-norm basis columns.

    Returns the generator too so later column re-draws continue the same
    deterministic stream.
    """
    rng = np.random.default_rng(seed)
    a = _normalize(_draw(rng, (m, r)))
    s = _draw(rng, (r, n))
    return a, s, rng


def _redraw_zero_columns(a, rng):
    norms = np.sqrt(np.sum(a * a, axis=0))
    for j in np.flatnonzero(norms == 0.0):
        log.warning("basis column %d collapsed to zero; re-drawing it", j)
        a[:, j] = _draw(rng, a.shape[0])
    return a


def _relative_change(prev: float, cur: float) -> float:
    scale = max(abs(prev), abs(cur), np.finfo(float).tiny)
    return abs(prev - cur) / scale


Callback = Callable[[int, Factorization], None]


def _check_rank(r: int) -> int:
    if int(r) < 1:
        raise ValueError(f"number of components must be >= 1, got {r}")
    return int(r)


def restart_seeds(cfg: "SolverConfig") -> list:
    """Initialization seeds for each restart; the first is ``cfg.seed`` itself."""
    return [cfg.seed] + [np.random.SeedSequence([cfg.seed, k]) for k in range(1, cfg.restarts)]


def _best_of(run, p: Problem, r: int, cfg: SolverConfig, callback):
    best = None
    for k, seed in enumerate(restart_seeds(cfg)):
        f, trace = run(p, r, cfg, seed, callback)
        trace.restart = k
        if best is None or trace.final_objective < best[1].final_objective:
            best = (f, trace)
    if cfg.restarts > 1:
        log.info("kept restart %d of %d (objective %.6g)", best[1].restart, cfg.restarts, best[1].final_objective)
    return best


def nnsc_fit(
    p: Problem,
    r: int,
    cfg: SolverConfig = SolverConfig(),
    callback: Optional[Callback] = None,
) -> tuple[Factorization, Trace]:
    """Learn a sparse non-negative factorization of ``p.x`` with ``r`` components.

    Each outer iteration takes a projected gradient step on the basis using
    the current components, then one multiplicative update of the
    components using the new basis. ``callback(t, factorization)`` is called
    after every outer iteration. With ``cfg.restarts > 1`` the whole fit is
    repeated from fresh random starts and the lowest final objective wins.
    """
    return _best_of(_nnsc_run, p, _check_rank(r), cfg, callback)


def _nnsc_run(p, r, cfg, seed, callback):
    lam = p.lam if cfg.lam is None else float(cfg.lam)
    x = p.x.values
    m, n = x.shape
    a, s, rng = initialize(m, r, n, seed)
    mu = cfg.mu
    mu_max = cfg.mu * cfg.mu_cap

    obj = _objective(x, a, s, lam)
    trace = Trace(seed=cfg.seed)
    trace.records.append(TraceRecord(0, obj, _violation(a, s, Mode.NNSC), mu))

    quiet = 0
    for t in range(1, int(cfg.max_iters) + 1):
        if cfg.backtracking:
            a, used_mu = _backtrack_a(x, a, s, lam, mu, obj, cfg.max_halvings)
            if used_mu > 0:
                mu = min(used_mu * cfg.mu_growth, mu_max)
        else:
            step = np.maximum(_gradient_step_a(x, a, s, mu), 0.0)
            a = _normalize(_redraw_zero_columns(step, rng))
            used_mu = mu
        s = _update_s(x, a, s, lam, cfg.eps_div)

        prev, obj = obj, _objective(x, a, s, lam)
        trace.records.append(TraceRecord(t, obj, _violation(a, s, Mode.NNSC), used_mu))
        if callback is not None:
            callback(t, Factorization(Matrix._wrap(a.copy()), Matrix._wrap(s.copy())))

        quiet = quiet + 1 if _relative_change(prev, obj) < cfg.tol else 0
        if quiet >= cfg.patience:
            trace.converged = True
            break

    return Factorization(Matrix._wrap(a), Matrix._wrap(s)), trace


def _backtrack_a(x, a, s, lam, mu, obj, max_halvings):
    """Try the basis step at ``mu``, halving until the objective does not rise.

    Returns the new basis and the step size that was accepted. If no step
    within ``max_halvings`` halvings is acceptable the basis is left
    unchanged and the returned step is 0.
    """
    trial = mu
    for _ in range(max_halvings + 1):
        try:
            cand = _project_a(x, a, s, trial)
        except ZeroColumnError:
            trial *= 0.5
            continue
        if _objective(x, cand, s, lam) <= obj:
            return cand, trial
        trial *= 0.5
    return a, 0.0


def _violation(a, s, mode):
    worst = max(0.0, -float(a.min()), -float(s.min()))
    if mode is Mode.NNSC:
        norms = np.sqrt(np.sum(a * a, axis=0))
        worst = max(worst, float(np.max(np.abs(norms - 1.0))))
    return worst


def nmf_fit(
    p: Problem,
    r: int,
    cfg: SolverConfig = SolverConfig(mode=Mode.NMF),
    callback: Optional[Callback] = None,
) -> tuple[Factorization, Trace]:
    """Plain NMF by Lee-Seung multiplicative updates (sparseness weight ignored).

    Uses the same initialization, update order and restart handling as
    :func:`nnsc_fit` but leaves basis column norms free.
    """
    return _best_of(_nmf_run, p, _check_rank(r), cfg, callback)


def _nmf_run(p, r, cfg, seed, callback):
    x = p.x.values
    m, n = x.shape
    a, s, _ = initialize(m, r, n, seed)
    obj = _objective(x, a, s, 0.0)
    trace = Trace(seed=cfg.seed)
    trace.records.append(TraceRecord(0, obj, _violation(a, s, Mode.NMF), math.nan))

    quiet = 0
    for t in range(1, int(cfg.max_iters) + 1):
        a = _update_a_mult(x, a, s, cfg.eps_div)
        s = _update_s(x, a, s, 0.0, cfg.eps_div)
        prev, obj = obj, _objective(x, a, s, 0.0)
        trace.records.append(TraceRecord(t, obj, _violation(a, s, Mode.NMF), math.nan))
        if callback is not None:
            callback(t, Factorization(Matrix._wrap(a.copy()), Matrix._wrap(s.copy())))
        quiet = quiet + 1 if _relative_change(prev, obj) < cfg.tol else 0
        if quiet >= cfg.patience:
            trace.converged = True
            break

    return Factorization(Matrix._wrap(a), Matrix._wrap(s)), trace


def fit(p: Problem, r: int, cfg: SolverConfig = SolverConfig(), callback: Optional[Callback] = None):
    """Dispatch to :func:`nnsc_fit` or :func:`nmf_fit` according to ``cfg.mode``."""
    if cfg.mode is Mode.NMF:
        return nmf_fit(p, r, cfg, callback)
    return nnsc_fit(p, r, cfg, callback)
