"""Orchestration of the runtime set-reduction algorithm.

Three entry points sharing one result type:

* :func:`plain_newton` - the baseline, one Newton series on every unknown;
* :func:`set_algorithm` - repeat {one global step, rule, local set, inner
  solve to local convergence, global re-test};
* :func:`set_algorithm_variant` - a single Newton series that re-selects the
  active set before every iteration.

Convergence is only ever declared from the full residual against the global
initial norm; reduced-norm tests steer the inner solves, never the outcome.
"""

from __future__ import annotations

import enum
import logging
import time
from dataclasses import dataclass, field, replace

import numpy as np

from .indexset import GridMap, LayeredIndexSet, build_from_flags, full_set
from .newton import IterationRecord, NewtonConfig, SolveStatus, converged, newton_solve
from .problems import NonlinearProblem
from .setrules import RuleConfig, select_flags

__all__ = [
    "SetVariant",
    "SetSolveConfig",
    "SetSolveResult",
    "plain_newton",
    "set_algorithm",
    "set_algorithm_variant",
    "solve",
]


class SetVariant(str, enum.Enum):
    INNER_SOLVE = "inner_solve"
    SINGLE_SERIES = "single_series"


@dataclass(frozen=True)
class SetSolveConfig:
    rule: RuleConfig = field(default_factory=RuleConfig)
    variant: SetVariant = SetVariant.INNER_SOLVE
    global_budget: int = 1
    inner_max_iters: int = 20
    newton: NewtonConfig = field(default_factory=NewtonConfig)
    max_outer_cycles: int = 20

    def __post_init__(self):
        if self.global_budget < 1:
            raise ValueError(f"global_budget must be >= 1, got {self.global_budget}")
        if self.inner_max_iters < 1:
            raise ValueError(f"inner_max_iters must be >= 1, got {self.inner_max_iters}")
        if self.max_outer_cycles < 1:
            raise ValueError(f"max_outer_cycles must be >= 1, got {self.max_outer_cycles}")


@dataclass
class SetSolveResult:
    x_final: np.ndarray
    status: SolveStatus
    outer_cycles: int
    total_nonlinear_iters: int
    total_linear_iters: int
    set_size_trace: list[int]
    history: list[IterationRecord]
    wall_time: float
    final_global_norm: float
    formed_sets: list[tuple[int, LayeredIndexSet]]

    @property
    def reduced_work(self) -> int:
        """Active-set-size-weighted linear iterations (hardware-free cost)."""
        return sum(rec.set_size * rec.linear_iters for rec in self.history)


def _finish(
    x, status, outer_cycles, trace, history, t0, final_norm, formed
) -> SetSolveResult:
    return SetSolveResult(
        x_final=x,
        status=status,
        outer_cycles=outer_cycles,
        total_nonlinear_iters=sum(1 for rec in history if rec.k > 0),
        total_linear_iters=sum(rec.linear_iters for rec in history),
        set_size_trace=trace,
        history=history,
        wall_time=time.perf_counter() - t0,
        final_global_norm=final_norm,
        formed_sets=formed,
    )


_log = logging.getLogger(__name__)


def _local_set_or_fallback(
    flags: np.ndarray, grid: GridMap, fallback: LayeredIndexSet
) -> LayeredIndexSet:
    """Never hand an empty set to the Newton solver: an empty selection means
    the rule found nothing above tolerance, so the cycle runs globally."""
    iset = build_from_flags(flags, grid)
    if iset.size == 0:
        return fallback
    # Diagnostic only: on 1D problems with a single hard spot the selection
    # usually forms one interval, but sets formed after an inner solve can
    # legitimately split around the already-converged core.
    if grid.nj == 1 and iset.size > 1 and not np.all(np.diff(iset.members) == 1):
        sv = iset.setvec
        _log.warning(
            "local set is not a contiguous interval (size %d spanning %d..%d)",
            iset.size, sv[0], sv[-1],
        )
    return iset


def plain_newton(
    problem: NonlinearProblem, x0: np.ndarray, cfg: NewtonConfig
) -> SetSolveResult:
    """Baseline: one Newton series on the full set, budget = cfg.max_iters."""
    t0 = time.perf_counter()
    x = np.asarray(x0, dtype=float).copy()
    sg = full_set(problem.grid)
    res = newton_solve(problem, sg, x, cfg, budget=cfg.max_iters)
    return _finish(
        x, res.status, res.steps, [sg.size], res.history, t0,
        res.residual_norm, [(1, sg)],
    )


def set_algorithm(
    problem: NonlinearProblem, x0: np.ndarray, cfg: SetSolveConfig
) -> SetSolveResult:
    """Outer cycles of global step, rule, local solve, global re-test.

    Each cycle: (1) run ``global_budget`` damped Newton steps on the full
    set to refresh the residual and the update, (2) apply the selection rule
    to flag unknowns, (3) build the local set (falling back to the full set
    when the rule selects nothing), (4) solve the local set to its own
    reduced tolerance, (5) re-test the full residual against the global
    initial norm.
    """
    if cfg.variant != SetVariant.INNER_SOLVE:
        raise ValueError("set_algorithm requires variant == INNER_SOLVE")
    t0 = time.perf_counter()
    x = np.asarray(x0, dtype=float).copy()
    grid = problem.grid
    sg = full_set(grid)
    ncfg = cfg.newton

    history: list[IterationRecord] = []
    trace: list[int] = []
    formed: list[tuple[int, LayeredIndexSet]] = []
    norm0_global: float | None = None
    status = SolveStatus.MAX_ITERS
    final_norm = np.inf
    cycles = 0
    forcing_state = None

    for cycle in range(1, cfg.max_outer_cycles + 1):
        cycles = cycle
        # The per-cycle global steps form one interrupted Newton series on
        # the full set; chaining the forcing state tightens their linear
        # tolerance as the overall residual falls.
        gres = newton_solve(
            problem, sg, x, ncfg, budget=cfg.global_budget,
            forcing_state=forcing_state, norm0_ref=norm0_global,
        )
        forcing_state = gres.forcing_state
        history.extend(gres.history)
        if norm0_global is None:
            norm0_global = gres.history[0].residual_norm
        final_norm = gres.residual_norm
        if gres.status == SolveStatus.LINEAR_FAILURE:
            status = SolveStatus.LINEAR_FAILURE
            break
        if converged(gres.residual_norm, norm0_global, ncfg):
            status = SolveStatus.CONVERGED
            break

        f_full = gres.residual  # reduced residual on the full set
        dx_full = gres.last_update_full
        if dx_full is None:
            dx_full = np.zeros(problem.n)
        flags = select_flags(f_full, dx_full, x, cfg.rule)
        local = _local_set_or_fallback(flags, grid, sg)
        trace.append(local.size)
        formed.append((cycle, local))

        ires = newton_solve(problem, local, x, ncfg, budget=cfg.inner_max_iters)
        history.extend(ires.history)
        if ires.status == SolveStatus.LINEAR_FAILURE:
            status = SolveStatus.LINEAR_FAILURE
            break

        f_full = problem.residual_full(x)
        final_norm = float(np.linalg.norm(f_full))
        history[-1].global_residual_norm = final_norm
        if converged(final_norm, norm0_global, ncfg):
            status = SolveStatus.CONVERGED
            break

    return _finish(x, status, cycles, trace, history, t0, final_norm, formed)


def set_algorithm_variant(
    problem: NonlinearProblem, x0: np.ndarray, cfg: SetSolveConfig
) -> SetSolveResult:
    """Single Newton series with a freshly selected set at every iteration.

    The first iteration runs on the full set (no update information exists
    yet); afterwards the rule sees the current full residual and the last
    applied update. Each iteration is one damped Newton step; the forcing
    schedule is carried across iterations so a rule that always selects
    everything reproduces the plain Newton series exactly.
    """
    if cfg.variant != SetVariant.SINGLE_SERIES:
        raise ValueError("set_algorithm_variant requires variant == SINGLE_SERIES")
    t0 = time.perf_counter()
    x = np.asarray(x0, dtype=float).copy()
    grid = problem.grid
    sg = full_set(grid)

    history: list[IterationRecord] = []
    trace: list[int] = []
    formed: list[tuple[int, LayeredIndexSet]] = []
    norm0_global: float | None = None
    status = SolveStatus.MAX_ITERS
    final_norm = np.inf
    f_full: np.ndarray | None = None
    prev_update = np.zeros(problem.n)
    forcing_state = None
    iters = 0

    for k in range(1, cfg.max_outer_cycles + 1):
        iters = k
        if k == 1:
            iset = sg
        else:
            flags = select_flags(f_full, prev_update, x, cfg.rule)
            iset = _local_set_or_fallback(flags, grid, sg)
        trace.append(iset.size)
        formed.append((k, iset))

        res = newton_solve(
            problem, iset, x, cfg.newton, budget=1,
            forcing_state=forcing_state, norm0_ref=norm0_global,
        )
        history.extend(res.history)
        if norm0_global is None:
            norm0_global = res.history[0].residual_norm
        if res.status == SolveStatus.LINEAR_FAILURE:
            status = SolveStatus.LINEAR_FAILURE
            final_norm = res.residual_norm
            break
        forcing_state = res.forcing_state
        if res.last_update_full is not None:
            prev_update = res.last_update_full

        f_full = res.residual if iset.is_full else problem.residual_full(x)
        final_norm = float(np.linalg.norm(f_full))
        history[-1].global_residual_norm = final_norm
        if converged(final_norm, norm0_global, cfg.newton):
            status = SolveStatus.CONVERGED
            break

    return _finish(x, status, iters, trace, history, t0, final_norm, formed)


def solve(
    problem: NonlinearProblem, x0: np.ndarray, method: str, cfg: SetSolveConfig
) -> SetSolveResult:
    """Dispatch by method name: 'newton', 'set' or 'set_variant'."""
    if method == "newton":
        return plain_newton(problem, x0, cfg.newton)
    if method == "set":
        return set_algorithm(problem, x0, replace(cfg, variant=SetVariant.INNER_SOLVE))
    if method == "set_variant":
        return set_algorithm_variant(
            problem, x0, replace(cfg, variant=SetVariant.SINGLE_SERIES)
        )
    raise ValueError(f"unknown method {method!r}")
