"""Reference solver for the hidden components with the basis held fixed.

Minimizes ``1/2 ||X - A S||^2 + lam * sum(S)`` over ``S >= 0`` by projected
gradient descent with Armijo backtracking. The problem is convex, so this
gives an independent route to the global minimum that the multiplicative
update must also reach.
"""

from __future__ import annotations

import numpy as np

from .densemat import Matrix, ShapeError

__all__ = ["OracleError", "solve_s_reference", "kkt_residual"]

HARD_CAP = 1_000_000
ZERO = 1e-12


class OracleError(RuntimeError):
    pass


def _gradient(x, a, s, lam):
    return a.T @ (a @ s - x) + lam


def kkt_residual(x, a, s, lam) -> float:
    """Largest first-order optimality violation of ``s``.

    Entries at (numerical) zero only violate through a negative partial
    derivative; positive entries through any nonzero one.
    """
    x, a, s = (m.values if isinstance(m, Matrix) else np.asarray(m, float) for m in (x, a, s))
    g = _gradient(x, a, s, lam)
    at_zero = s <= ZERO
    viol = np.where(at_zero, np.maximum(-g, 0.0), np.abs(g))
    return float(viol.max())


def solve_s_reference(x: Matrix, a: Matrix, lam: float, tol: float = 1e-9, max_iters: int = HARD_CAP) -> Matrix:
    """Solve the non-negative S subproblem to first-order tolerance ``tol``.

    Starts from all entries 0.5. Raises :class:`OracleError` if the KKT
    residual is still above ``tol`` after ``max_iters`` iterations.
    """
    if a.rows != x.rows:
        raise ShapeError(f"basis {a.shape} does not match data {x.shape}")
    xv, av = x.values, a.values
    s = np.full((a.cols, x.cols), 0.5)
    lam = float(lam)

    # Lipschitz constant of the gradient is the top eigenvalue of A^T A,
    # bounded by its Frobenius norm; start from that step and backtrack.
    gram = av.T @ av
    step = 1.0 / max(np.sqrt(np.sum(gram * gram)), np.finfo(float).tiny)
    for _ in range(max_iters):
        g = _gradient(xv, av, s, lam)
        at_zero = s <= ZERO
        viol = np.where(at_zero, np.maximum(-g, 0.0), np.abs(g))
        if viol.max() <= tol:
            return Matrix(s)
        while True:
            cand = np.maximum(s - step * g, 0.0)
            cand[cand <= ZERO] = 0.0
            d = cand - s
            ad = av @ d
            # The objective is quadratic, so the increase over its linear
            # model is exactly 1/2 ||A d||^2; comparing that term directly
            # avoids cancellation between two nearly equal objective values.
            if 0.5 * float(np.sum(ad * ad)) <= float(np.sum(d * d)) / (2 * step):
                break
            step *= 0.5
        s = cand
        step *= 1.5
    raise OracleError(f"reference solver did not reach tol {tol} in {max_iters} iterations; residual {kkt_residual(xv, av, s, lam):.3e}")
