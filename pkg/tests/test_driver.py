import numpy as np
import pytest

from setnewton import (
    ForcingConfig,
    NewtonConfig,
    RuleConfig,
    RuleKind,
    SetSolveConfig,
    SetVariant,
    SolveStatus,
    SpikeBvp1D,
    converged,
    full_set,
    plain_newton,
    set_algorithm,
    set_algorithm_variant,
    solve,
)
from setnewton.driver import _local_set_or_fallback

from conftest import LinearProblem

TIGHT = NewtonConfig(forcing=ForcingConfig(eta0=1e-10, eta_min=1e-10))


def spike100():
    return SpikeBvp1D(100), np.zeros(100)


class TestPlainNewton:
    def test_spike_reference_bands(self):
        p, x0 = spike100()
        res = plain_newton(p, x0, NewtonConfig())
        assert res.status == SolveStatus.CONVERGED
        assert res.total_nonlinear_iters <= 12
        assert 20 <= res.total_linear_iters <= 70
        assert res.set_size_trace == [100]
        assert res.outer_cycles == res.total_nonlinear_iters

    def test_linear_problem_one_iteration(self, rng):
        n = 10
        A = rng.standard_normal((n, n)) + n * np.eye(n)
        p = LinearProblem(A, rng.standard_normal(n))
        res = plain_newton(p, np.zeros(n), TIGHT)
        assert res.status == SolveStatus.CONVERGED
        assert res.total_nonlinear_iters == 1

    def test_budget_capped_run_reports_max_iters(self):
        p, x0 = spike100()
        res = plain_newton(p, x0, NewtonConfig(max_iters=1))
        assert res.status == SolveStatus.MAX_ITERS
        assert res.total_nonlinear_iters == 1

    def test_work_accounting(self):
        p, x0 = spike100()
        res = plain_newton(p, x0, NewtonConfig())
        assert res.total_linear_iters == sum(r.linear_iters for r in res.history)
        assert res.reduced_work == 100 * res.total_linear_iters


class TestSetAlgorithm:
    def test_spike_localization(self):
        p, x0 = spike100()
        cfg = SetSolveConfig(rule=RuleConfig(RuleKind.RESIDUAL_MEAN, alpha=0.01))
        res = set_algorithm(p, x0, cfg)
        assert res.status == SolveStatus.CONVERGED
        assert res.outer_cycles <= 4
        first = res.formed_sets[0][1]
        sv = first.setvec
        assert first.size <= 16
        assert np.all(np.diff(sv) == 1), "first local set must be one interval"
        assert sv[0] <= 50 <= sv[-1]

    def test_second_set_overlaps_peak_window(self):
        p, x0 = spike100()
        cfg = SetSolveConfig(rule=RuleConfig(RuleKind.RESIDUAL_MEAN, alpha=0.01))
        res = set_algorithm(p, x0, cfg)
        if len(res.formed_sets) > 1:
            sv = res.formed_sets[1][1].setvec
            assert sv[0] <= 56 and sv[-1] >= 44, "second set should stay near the peak"

    def test_matches_plain_newton_solution(self):
        p, x0 = spike100()
        pn = plain_newton(p, x0, NewtonConfig())
        res = set_algorithm(p, x0, SetSolveConfig(rule=RuleConfig(RuleKind.RESIDUAL_MEAN, alpha=0.01)))
        assert np.max(np.abs(res.x_final - pn.x_final)) <= 1e-3 * 1000.0

    def test_select_everything_rule_equivalent_to_newton(self):
        p, x0 = spike100()
        pn = plain_newton(p, x0, NewtonConfig())
        cfg = SetSolveConfig(rule=RuleConfig(RuleKind.RESIDUAL_RMS, alpha=1e-12))
        res = set_algorithm(p, x0, cfg)
        assert res.status == SolveStatus.CONVERGED
        # same root as the baseline, to 1e-6 of the solution peak
        assert np.max(np.abs(res.x_final - pn.x_final)) <= 1e-6 * 1000.0

    def test_converged_only_from_full_residual(self):
        p, x0 = spike100()
        cfg = SetSolveConfig(rule=RuleConfig(RuleKind.RESIDUAL_MEAN, alpha=0.01))
        res = set_algorithm(p, x0, cfg)
        assert res.status == SolveStatus.CONVERGED
        full_norm = float(np.linalg.norm(p.residual_full(res.x_final)))
        norm0 = res.history[0].residual_norm
        assert converged(full_norm, norm0, cfg.newton)
        assert res.final_global_norm == pytest.approx(full_norm, rel=1e-12)

    def test_trace_sizes_sane(self):
        p, x0 = spike100()
        res = set_algorithm(p, x0, SetSolveConfig(rule=RuleConfig(RuleKind.RESIDUAL_MEAN, alpha=0.01)))
        assert len(res.set_size_trace) == len(res.formed_sets)
        assert all(1 <= s <= 100 for s in res.set_size_trace)

    def test_wrong_variant_rejected(self):
        p, x0 = spike100()
        cfg = SetSolveConfig(variant=SetVariant.SINGLE_SERIES)
        with pytest.raises(ValueError):
            set_algorithm(p, x0, cfg)

    def test_fallback_on_empty_selection(self):
        p, _ = spike100()
        sg = full_set(p.grid)
        out = _local_set_or_fallback(np.zeros(100, dtype=bool), p.grid, sg)
        assert out is sg
        one = np.zeros(100, dtype=bool)
        one[50] = True
        assert _local_set_or_fallback(one, p.grid, sg).size == 1


class TestDemo2D:
    def test_set_algorithm_matches_baseline(self):
        from setnewton import Demo2DPoisson

        p = Demo2DPoisson(12, 12)
        x0 = np.zeros(p.n)
        pn = plain_newton(p, x0, NewtonConfig())
        st = set_algorithm(
            p, x0, SetSolveConfig(rule=RuleConfig(RuleKind.RESIDUAL_MEAN, alpha=0.5))
        )
        assert pn.status == SolveStatus.CONVERGED
        assert st.status == SolveStatus.CONVERGED
        assert np.max(np.abs(st.x_final - pn.x_final)) <= 1e-6


class TestSolutionCorrectness:
    def test_converged_runs_stay_within_discretization_error(self):
        # whichever route converges must land on the same discrete solution:
        # nodal error within 5x the baseline's discretization error
        p, x0 = spike100()
        exact = p.exact_nodal()
        pn = plain_newton(p, x0, NewtonConfig())
        base_err = np.max(np.abs(pn.x_final - exact)) / 1000.0
        runs = [
            set_algorithm(p, x0, SetSolveConfig(rule=RuleConfig(RuleKind.RESIDUAL_MEAN, alpha=0.01))),
            set_algorithm_variant(
                p, x0,
                SetSolveConfig(
                    rule=RuleConfig(RuleKind.RESIDUAL_MEAN, alpha=0.01),
                    variant=SetVariant.SINGLE_SERIES,
                ),
            ),
        ]
        for res in runs:
            assert res.status == SolveStatus.CONVERGED
            err = np.max(np.abs(res.x_final - exact)) / 1000.0
            assert err <= 5.0 * base_err


class TestSingleSeriesVariant:
    def test_spike_converges_to_same_solution(self):
        p, x0 = spike100()
        pn = plain_newton(p, x0, NewtonConfig())
        cfg = SetSolveConfig(
            rule=RuleConfig(RuleKind.RESIDUAL_MEAN, alpha=0.01),
            variant=SetVariant.SINGLE_SERIES,
        )
        res = set_algorithm_variant(p, x0, cfg)
        assert res.status == SolveStatus.CONVERGED
        assert res.outer_cycles <= 20
        assert np.max(np.abs(res.x_final - pn.x_final)) <= 1e-3 * 1000.0

    def test_trace_length_is_iteration_count(self):
        p, x0 = spike100()
        cfg = SetSolveConfig(
            rule=RuleConfig(RuleKind.RESIDUAL_MEAN, alpha=0.01),
            variant=SetVariant.SINGLE_SERIES,
        )
        res = set_algorithm_variant(p, x0, cfg)
        assert len(res.set_size_trace) == res.total_nonlinear_iters

    def test_full_set_rule_degenerates_to_plain_newton(self):
        p, x0 = spike100()
        pn = plain_newton(p, x0, NewtonConfig())
        cfg = SetSolveConfig(
            rule=RuleConfig(RuleKind.RESIDUAL_MEAN, alpha=0.01, min_set_size=100),
            variant=SetVariant.SINGLE_SERIES,
        )
        res = set_algorithm_variant(p, x0, cfg)
        assert np.array_equal(res.x_final, pn.x_final)
        plain_steps = [(r.eta, r.lam, r.residual_norm) for r in pn.history if r.k > 0]
        var_steps = [(r.eta, r.lam, r.residual_norm) for r in res.history if r.k > 0]
        assert plain_steps == var_steps

    def test_wrong_variant_rejected(self):
        p, x0 = spike100()
        with pytest.raises(ValueError):
            set_algorithm_variant(p, x0, SetSolveConfig(variant=SetVariant.INNER_SOLVE))


class TestDispatch:
    def test_solve_names(self):
        p, x0 = spike100()
        cfg = SetSolveConfig(rule=RuleConfig(RuleKind.RESIDUAL_MEAN, alpha=0.01))
        for method in ("newton", "set", "set_variant"):
            res = solve(p, x0, method, cfg)
            assert res.status == SolveStatus.CONVERGED

    def test_unknown_method(self):
        p, x0 = spike100()
        with pytest.raises(ValueError):
            solve(p, x0, "bisection", SetSolveConfig())

    def test_config_validation(self):
        with pytest.raises(ValueError):
            SetSolveConfig(global_budget=0)
        with pytest.raises(ValueError):
            SetSolveConfig(inner_max_iters=0)
        with pytest.raises(ValueError):
            SetSolveConfig(max_outer_cycles=0)
