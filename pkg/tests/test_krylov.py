import numpy as np
import pytest

from setnewton import (
    EPS_CONST,
    GmresConfig,
    GmresStats,
    JfnkOperator,
    SpikeBvp1D,
    choose_epsilon,
    full_set,
    gmres_solve,
)

from conftest import LinearProblem, CountingProblem, dense_fd_jacobian, random_flags_set


class TestChooseEpsilon:
    def test_unit_norm_zero_base(self):
        eps = choose_epsilon(np.zeros(3), np.array([1.0, 0.0, 0.0]))
        assert eps == pytest.approx(np.sqrt(2.0**-52), rel=1e-15)
        assert eps == pytest.approx(1.4901161193847656e-08)

    def test_homogeneity_in_v(self):
        x = np.zeros(4)
        v = np.array([0.3, -0.4, 0.5, 1.0])
        assert choose_epsilon(x, 10 * v) == pytest.approx(choose_epsilon(x, v) / 10)

    def test_base_norm_scaling(self):
        x = np.zeros(2)
        x[0] = 999.0
        eps = choose_epsilon(x, np.array([1.0, 0.0]))
        assert eps == pytest.approx(1000.0 * EPS_CONST)

    def test_zero_direction_rejected(self):
        with pytest.raises(ValueError):
            choose_epsilon(np.ones(3), np.zeros(3))


class TestJfnkOperator:
    def test_linear_problem_matches_submatrix(self, rng):
        for _ in range(10):
            n = int(rng.integers(3, 21))
            A = rng.standard_normal((n, n)) + n * np.eye(n)
            b = rng.standard_normal(n)
            p = LinearProblem(A, b)
            s = random_flags_set(rng, p.grid)
            if s.size == 0:
                continue
            x = rng.standard_normal(n)
            op = JfnkOperator(p, s, x)
            v = rng.standard_normal(s.size)
            exact = A[np.ix_(s.members, s.members)] @ v
            got = op.apply(v)
            assert np.linalg.norm(got - exact) <= 1e-6 * max(np.linalg.norm(exact), 1.0)

    def test_identity_problem(self, rng):
        n = 8
        p = LinearProblem(np.eye(n), np.zeros(n))
        s = full_set(p.grid)
        op = JfnkOperator(p, s, np.zeros(n))
        v = rng.standard_normal(n)
        assert np.linalg.norm(op.apply(v) - v) <= 1e-8 * np.linalg.norm(v)

    def test_unit_vector_gives_fd_column(self, rng):
        p = SpikeBvp1D(10)
        x = 100 * rng.standard_normal(10)
        s = full_set(p.grid)
        op = JfnkOperator(p, s, x)
        J = dense_fd_jacobian(p, x)
        e1 = np.zeros(10)
        e1[0] = 1.0
        col = op.apply(e1)
        assert np.linalg.norm(col - J[:, 0]) <= 1e-5 * np.linalg.norm(J[:, 0])

    def test_submatrix_consistency_on_spike(self, rng):
        p = SpikeBvp1D(40)
        x = 500 * rng.standard_normal(40)
        J = dense_fd_jacobian(p, x)
        for _ in range(10):
            s = random_flags_set(rng, p.grid)
            if s.size == 0:
                continue
            op = JfnkOperator(p, s, x)
            v = rng.standard_normal(s.size)
            exact = J[np.ix_(s.members, s.members)] @ v
            assert np.linalg.norm(op.apply(v) - exact) <= 1e-5 * np.linalg.norm(exact)

    def test_one_reduced_eval_per_apply(self, rng):
        p = CountingProblem(SpikeBvp1D(20))
        s = full_set(p.grid)
        op = JfnkOperator(p, s, rng.standard_normal(20))
        base_calls = p.reduced_calls  # constructor evaluates the base residual
        op.apply(rng.standard_normal(20))
        op.apply(rng.standard_normal(20))
        assert p.reduced_calls == base_calls + 2

    def test_zero_v_rejected(self):
        p = SpikeBvp1D(5)
        op = JfnkOperator(p, full_set(p.grid), np.zeros(5))
        with pytest.raises(ValueError):
            op.apply(np.zeros(5))


def _mat_op(A):
    return lambda v: A @ v


class TestGmres:
    def test_identity_single_iteration(self, rng):
        rhs = rng.standard_normal(12)
        x, stats = gmres_solve(_mat_op(np.eye(12)), rhs, GmresConfig(rtol=1e-10))
        assert np.allclose(x, rhs, rtol=0, atol=1e-12)
        assert stats.iterations == 1
        assert stats.converged

    def test_diagonal_krylov_exactness(self):
        d = np.arange(1.0, 6.0)
        rhs = np.ones(5)
        x, stats = gmres_solve(_mat_op(np.diag(d)), rhs, GmresConfig(rtol=1e-12))
        assert np.allclose(x, 1.0 / d, rtol=1e-10)
        assert stats.iterations <= 5
        assert stats.converged

    def test_random_system_verified_residual(self, rng):
        n = 20
        A = rng.standard_normal((n, n)) + n * np.eye(n)
        rhs = rng.standard_normal(n)
        x, stats = gmres_solve(_mat_op(A), rhs, GmresConfig(rtol=1e-10))
        rel = np.linalg.norm(rhs - A @ x) / np.linalg.norm(rhs)
        assert stats.converged
        assert rel <= 1e-10

    def test_zero_rhs(self):
        x, stats = gmres_solve(_mat_op(np.eye(4)), np.zeros(4), GmresConfig())
        assert np.array_equal(x, np.zeros(4))
        assert stats.iterations == 0
        assert stats.converged

    def test_nonfinite_rhs_fails_cleanly(self):
        rhs = np.array([1.0, np.inf, 0.0])
        x, stats = gmres_solve(_mat_op(np.eye(3)), rhs, GmresConfig())
        assert not stats.converged
        assert stats.iterations == 0
        assert np.array_equal(x, np.zeros(3))

    def test_stagnation_reports_nonconvergence(self, rng):
        n = 30
        # highly non-normal shift operator: GMRES stalls until dimension n
        A = np.eye(n, k=1) + 1e-3 * np.eye(n)
        rhs = np.zeros(n)
        rhs[-1] = 1.0
        cfg = GmresConfig(restart=5, max_total_iters=10, rtol=1e-12)
        x, stats = gmres_solve(_mat_op(A), rhs, cfg)
        assert not stats.converged
        assert stats.iterations == 10
        rel = np.linalg.norm(rhs - A @ x) / np.linalg.norm(rhs)
        assert stats.final_relative_residual == pytest.approx(rel, abs=1e-8)

    def test_breakdown_flag_on_invariant_subspace(self):
        # rhs is an eigenvector: happy breakdown at step 1, exact answer
        A = np.diag([2.0, 3.0, 4.0])
        rhs = np.array([1.0, 0.0, 0.0])
        x, stats = gmres_solve(_mat_op(A), rhs, GmresConfig(rtol=1e-12))
        assert stats.breakdown
        assert stats.converged
        assert np.allclose(x, rhs / 2.0, rtol=1e-14)

    def test_finite_termination_property(self, rng):
        for _ in range(100):
            n = int(rng.integers(2, 31))
            A = rng.standard_normal((n, n)) + n * np.eye(n)
            rhs = rng.standard_normal(n)
            cfg = GmresConfig(restart=n, max_total_iters=max(2 * n, n), rtol=1e-10)
            x, stats = gmres_solve(_mat_op(A), rhs, cfg)
            assert stats.converged
            assert stats.iterations <= n

    def test_reported_residual_matches_recompute(self, rng):
        # small restart forces several cycles; estimate must not go stale
        for _ in range(100):
            n = int(rng.integers(5, 26))
            A = rng.standard_normal((n, n)) + (n / 2) * np.eye(n)
            rhs = rng.standard_normal(n)
            cfg = GmresConfig(
                restart=4, max_total_iters=int(rng.integers(4, 40)), rtol=1e-8
            )
            x, stats = gmres_solve(_mat_op(A), rhs, cfg)
            rel = np.linalg.norm(rhs - A @ x) / np.linalg.norm(rhs)
            assert abs(stats.final_relative_residual - rel) <= 1e-8

    def test_config_validation(self):
        with pytest.raises(ValueError):
            GmresConfig(restart=0)
        with pytest.raises(ValueError):
            GmresConfig(restart=10, max_total_iters=5)

    def test_stats_shape(self):
        stats = GmresStats(3, 1e-12, True, False)
        assert stats.iterations == 3
