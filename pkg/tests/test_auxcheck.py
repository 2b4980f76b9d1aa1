import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nnsc.auxcheck import (
    ColumnSubproblem,
    argmin_g,
    f_col,
    g_aux,
    grad_f,
    k_diag,
    min_eig_k_minus_ata,
    symmetric_eigenvalues,
)
from nnsc.densemat import Matrix, ShapeError
from nnsc.model import Factorization, Problem, objective_nnsc
from nnsc.solver import update_s


def column_problem(rng, m=6, r=4, lam=0.3):
    a = rng.uniform(0, 1, (m, r))
    a /= np.linalg.norm(a, axis=0)
    return ColumnSubproblem(a, rng.uniform(0, 1, m), lam)


def fd_gradient(fn, s, h=1e-6):
    g = np.zeros_like(s)
    for i in range(len(s)):
        e = np.zeros_like(s)
        e[i] = h
        g[i] = (fn(s + e) - fn(s - e)) / (2 * h)
    return g


class TestObjective:
    def test_exact_fit(self, rng):
        a = rng.uniform(0, 1, (4, 2))
        s = rng.uniform(0, 1, 2)
        assert f_col(ColumnSubproblem(a, a @ s, 0.0), s) == pytest.approx(0.0, abs=1e-28)

    def test_scalar(self):
        assert f_col(ColumnSubproblem([[1.0]], [2.0], 1.0), [1.0]) == 1.5

    def test_columns_sum_to_matrix_objective(self, rng):
        a = rng.uniform(0, 1, (5, 3))
        x = rng.uniform(0, 1, (5, 7))
        s = rng.uniform(0, 1, (3, 7))
        total = sum(f_col(ColumnSubproblem.from_column(Matrix(x), Matrix(a), 0.2, j), s[:, j]) for j in range(7))
        whole = objective_nnsc(Problem(Matrix(x), 0.2), Factorization(Matrix(a), Matrix(s)))
        assert abs(total - whole) <= 1e-12

    def test_length_checked(self):
        with pytest.raises(ShapeError):
            f_col(ColumnSubproblem([[1.0, 0.5]], [1.0], 0.0), [1.0])

    def test_rejects_negative_data(self):
        with pytest.raises(ValueError):
            ColumnSubproblem([[1.0]], [-1.0], 0.0)


class TestGradient:
    def test_scalar(self):
        np.testing.assert_allclose(grad_f(ColumnSubproblem([[1.0]], [1.0], 0.5), [1.0]), [0.5])

    def test_zero_at_least_squares_solution(self, rng):
        a = rng.uniform(0, 1, (6, 3))
        s_true = rng.uniform(0.5, 1, 3)
        sp = ColumnSubproblem(a, a @ s_true, 0.0)
        s_star = np.linalg.lstsq(a, sp.x, rcond=None)[0]
        np.testing.assert_allclose(grad_f(sp, s_star), 0.0, atol=1e-12)

    @pytest.mark.parametrize("seed", range(10))
    def test_finite_differences(self, seed):
        rng = np.random.default_rng(seed)
        sp = column_problem(rng)
        s = rng.uniform(0.1, 2, sp.r)
        g = grad_f(sp, s)
        fd = fd_gradient(lambda v: f_col(sp, v), s)
        assert np.max(np.abs(g - fd)) <= 1e-5 * max(1.0, np.max(np.abs(g)))


class TestCurvature:
    def test_scalar(self):
        np.testing.assert_allclose(k_diag(ColumnSubproblem([[1.0]], [0.0], 0.0), [2.0]), [1.0])

    def test_dominates_lee_seung(self, rng):
        sp = column_problem(rng, lam=0.0)
        s_t = rng.uniform(0.1, 1, sp.r)
        lee_seung = (sp.a.T @ sp.a @ s_t) / s_t
        np.testing.assert_allclose(k_diag(sp, s_t), lee_seung, rtol=1e-15)
        bigger = k_diag(ColumnSubproblem(sp.a, sp.x, 0.25), s_t)
        assert np.all(bigger > lee_seung)

    def test_requires_positive_point(self):
        with pytest.raises(ValueError, match="entry 1"):
            k_diag(ColumnSubproblem([[1.0, 1.0]], [1.0], 0.0), [1.0, 0.0])

    @settings(max_examples=100, deadline=None)
    @given(st.integers(0, 2**32 - 1), st.integers(1, 6), st.integers(1, 8), st.sampled_from([0.0, 0.1, 1.0]))
    def test_k_minus_gram_is_psd(self, seed, r, m, lam):
        rng = np.random.default_rng(seed)
        sp = column_problem(rng, m=m, r=r, lam=lam)
        s_t = rng.uniform(0.01, 2, r)
        assert min_eig_k_minus_ata(sp, s_t) >= -1e-8


class TestJacobi:
    @pytest.mark.parametrize("n", [1, 2, 3, 6])
    def test_matches_lapack(self, rng, n):
        b = rng.normal(size=(n, n))
        m = b + b.T
        np.testing.assert_allclose(symmetric_eigenvalues(m), np.linalg.eigvalsh(m), atol=1e-12)

    def test_diagonal(self):
        np.testing.assert_array_equal(symmetric_eigenvalues(np.diag([3.0, -1.0, 2.0])), [-1.0, 2.0, 3.0])

    def test_rejects_asymmetric(self):
        with pytest.raises(ValueError):
            symmetric_eigenvalues([[1.0, 2.0], [0.0, 1.0]])


class TestAuxiliary:
    def test_touches_at_expansion_point(self, rng):
        sp = column_problem(rng)
        s = rng.uniform(0.1, 1, sp.r)
        assert abs(g_aux(sp, s, s) - f_col(sp, s)) <= 1e-10

    @pytest.mark.parametrize("seed", range(5))
    def test_upper_bound(self, seed):
        rng = np.random.default_rng(seed)
        sp = column_problem(rng)
        for _ in range(1000):
            s = rng.uniform(0, 3, sp.r)
            s_t = rng.uniform(0.01, 3, sp.r)
            assert g_aux(sp, s, s_t) >= f_col(sp, s) - 1e-10

    @pytest.mark.parametrize("lam", [0.0, 0.1, 1.0])
    def test_minimizer_is_multiplicative_update(self, rng, lam):
        a = rng.uniform(0, 1, (6, 4))
        x = rng.uniform(0, 1, (6, 3))
        s = rng.uniform(0.1, 1, (4, 3))
        updated = update_s(Matrix(x), Matrix(a), Matrix(s), lam).values
        for j in range(3):
            sp = ColumnSubproblem(a, x[:, j], lam)
            np.testing.assert_allclose(argmin_g(sp, s[:, j]), updated[:, j], rtol=0, atol=1e-10)
            # and it really is the minimizer: zero gradient of G there
            k = k_diag(sp, s[:, j])
            grad_g = grad_f(sp, s[:, j]) + k * (argmin_g(sp, s[:, j]) - s[:, j])
            np.testing.assert_allclose(grad_g, 0.0, atol=1e-12)

    def test_sandwich_chain(self, rng):
        sp = column_problem(rng, lam=0.2)
        s_t = rng.uniform(0.1, 1, sp.r)
        for _ in range(200):
            s_next = argmin_g(sp, s_t)
            f_next, g_next, f_t = f_col(sp, s_next), g_aux(sp, s_next, s_t), f_col(sp, s_t)
            assert f_next <= g_next + 1e-10
            assert g_next <= g_aux(sp, s_t, s_t) + 1e-10
            assert abs(g_aux(sp, s_t, s_t) - f_t) <= 1e-10
            s_t = s_next

    @settings(max_examples=30, deadline=None)
    @given(st.integers(0, 2**32 - 1))
    def test_quadratic_in_s(self, seed):
        rng = np.random.default_rng(seed)
        sp = column_problem(rng)
        s_t = rng.uniform(0.1, 1, sp.r)
        base = rng.uniform(0, 1, sp.r)
        d = rng.normal(size=sp.r)
        ts = np.array([0.0, 0.5, 1.0])
        coeffs = np.polyfit(ts, [g_aux(sp, base + t * d, s_t) for t in ts], 2)
        val = g_aux(sp, base + 1.7 * d, s_t)
        assert abs(np.polyval(coeffs, 1.7) - val) <= 1e-9 * max(1.0, abs(val))
