"""Inexact Newton iteration over an arbitrary active set.

One :func:`newton_solve` run owns its iterate: the combined
absolute/relative convergence test is taken against the reduced residual
norm at set entry, the linear tolerance follows an adaptive forcing
schedule, updates are damped by Armijo backtracking and scattered onto set
members only, so frozen unknowns stay bit-identical.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .indexset import LayeredIndexSet, scatter_update
from .krylov import GmresConfig, JfnkOperator, ResidualOverflowError, gmres_solve
from .problems import NonlinearProblem

__all__ = [
    "SolveStatus",
    "ForcingConfig",
    "LineSearchConfig",
    "NewtonConfig",
    "IterationRecord",
    "NewtonResult",
    "converged",
    "forcing_eta",
    "line_search",
    "newton_solve",
]


class SolveStatus(str, enum.Enum):
    CONVERGED = "converged"
    MAX_ITERS = "max_iters"
    LINEAR_FAILURE = "linear_failure"


@dataclass(frozen=True)
class ForcingConfig:
    """Adaptive linear-solve tolerance: eta = gamma*(norm ratio)^exponent,
    kept above gamma*eta_prev^exponent while that safeguard exceeds 0.1,
    then clamped to [eta_min, eta_max]."""

    eta0: float = 0.9
    gamma: float = 0.9
    exponent: float = 2.0
    eta_max: float = 0.9
    eta_min: float = 1e-6

    def __post_init__(self):
        if not 0.0 < self.eta_min <= self.eta_max < 1.0:
            raise ValueError(
                f"need 0 < eta_min <= eta_max < 1, got {self.eta_min}, {self.eta_max}"
            )


@dataclass(frozen=True)
class LineSearchConfig:
    armijo_c: float = 1e-4
    shrink: float = 0.5
    max_backtracks: int = 10
    lambda_min: float = 1e-4

    def __post_init__(self):
        if not 0.0 < self.armijo_c < 1.0:
            raise ValueError(f"armijo_c must lie in (0, 1), got {self.armijo_c}")
        if not 0.0 < self.shrink < 1.0:
            raise ValueError(f"shrink must lie in (0, 1), got {self.shrink}")


@dataclass(frozen=True)
class NewtonConfig:
    """Tolerances and sub-solver parameters for one Newton series."""

    tau_abs: float = 1e-8
    tau_rel: float = 1e-8
    max_iters: int = 20
    forcing: ForcingConfig = field(default_factory=ForcingConfig)
    linesearch: LineSearchConfig = field(default_factory=LineSearchConfig)
    gmres: GmresConfig = field(default_factory=GmresConfig)

    def __post_init__(self):
        if self.tau_abs <= 0.0 or self.tau_rel <= 0.0:
            raise ValueError("tau_abs and tau_rel must be positive")
        if self.max_iters < 1:
            raise ValueError(f"max_iters must be >= 1, got {self.max_iters}")


@dataclass
class IterationRecord:
    """Per-iteration bookkeeping; k = 0 records the initial residual and is
    excluded from all reported iteration counts."""

    k: int
    set_size: int
    residual_norm: float
    global_residual_norm: float | None
    eta: float
    linear_iters: int
    lam: float
    ls_failed: bool = False
    phase: str = ""


@dataclass
class NewtonResult:
    """Outcome of :func:`newton_solve`.

    Besides the history/status contract this carries what a driver needs to
    continue: the final reduced residual, the last applied update scattered
    to full length, and the forcing state for chaining budget-limited calls
    into one uninterrupted Newton series.
    """

    history: list[IterationRecord]
    status: SolveStatus
    residual: np.ndarray
    residual_norm: float
    last_update_full: np.ndarray | None
    forcing_state: tuple[float, float] | None

    @property
    def steps(self) -> int:
        return sum(1 for rec in self.history if rec.k > 0)

    @property
    def linear_iters(self) -> int:
        return sum(rec.linear_iters for rec in self.history)


def converged(norm: float, norm0: float, cfg: NewtonConfig) -> bool:
    """Combined test: norm <= tau_abs + tau_rel * norm0.

    A non-finite norm never counts as converged (an overflowed residual
    would otherwise pass against its own infinite reference)."""
    return math.isfinite(norm) and norm <= cfg.tau_abs + cfg.tau_rel * norm0


def forcing_eta(
    norm_k: float,
    norm_km1: float,
    eta_prev: float,
    cfg: NewtonConfig,
    first: bool,
) -> float:
    """Forcing term for the next linear solve (eta0 on the first step)."""
    fc = cfg.forcing
    if first:
        return min(max(fc.eta0, fc.eta_min), fc.eta_max)
    eta = fc.gamma * (norm_k / norm_km1) ** fc.exponent
    safeguard = fc.gamma * eta_prev**fc.exponent
    if safeguard > 0.1:
        eta = max(eta, safeguard)
    return min(max(eta, fc.eta_min), fc.eta_max)


def line_search(
    problem: NonlinearProblem,
    iset: LayeredIndexSet,
    x: np.ndarray,
    dx: np.ndarray,
    f0norm: float,
    cfg: NewtonConfig,
) -> tuple[float, np.ndarray, bool]:
    """Backtracking Armijo search on the reduced residual norm.

    Returns the largest lam in {1, s, s^2, ...} (s = shrink) whose trial
    satisfies ||f(x + lam*dx on members)|| <= (1 - armijo_c*lam) * f0norm,
    together with the accepted reduced residual. Non-finite trials count as
    failed. When no trial passes within max_backtracks, lambda_min and its
    residual are returned with the failure flag set; the caller records the
    flag and continues.
    """
    ls = cfg.linesearch
    lam = 1.0
    for _ in range(ls.max_backtracks):
        trial = scatter_update(x.copy(), iset, dx, lam)
        f_trial = problem.residual_reduced(trial, iset)
        fnorm = float(np.linalg.norm(f_trial))
        if np.isfinite(fnorm) and fnorm <= (1.0 - ls.armijo_c * lam) * f0norm:
            return lam, f_trial, False
        lam *= ls.shrink
    trial = scatter_update(x.copy(), iset, dx, ls.lambda_min)
    f_trial = problem.residual_reduced(trial, iset)
    return ls.lambda_min, f_trial, True


def newton_solve(
    problem: NonlinearProblem,
    iset: LayeredIndexSet,
    x: np.ndarray,
    cfg: NewtonConfig,
    budget: int,
    forcing_state: tuple[float, float] | None = None,
    norm0_ref: float | None = None,
) -> NewtonResult:
    """Run at most min(budget, cfg.max_iters) damped inexact Newton steps.

    ``x`` is updated in place on member indices only. Each step solves the
    reduced Jacobian system matrix-free with GMRES at the current forcing
    tolerance and rhs -f, then damps the update with the line search.

    The convergence reference is the reduced residual norm at set entry;
    a driver chaining budget-limited calls into one series passes the
    series' initial norm as ``norm0_ref`` together with the previous call's
    ``forcing_state``, which makes the chained calls reproduce an
    uninterrupted run exactly. The linear tolerance is floored at half the
    distance to the convergence threshold so the last solves do not grind
    far below what the nonlinear test can use.
    """
    if iset.size == 0:
        raise ValueError("newton_solve requires a nonempty set")
    if budget < 1:
        raise ValueError(f"budget must be >= 1, got {budget}")
    x = np.asarray(x)
    if x.shape != (problem.n,):
        raise ValueError(f"expected iterate of length {problem.n}, got shape {x.shape}")

    phase = "global" if iset.is_full else "local"
    f = problem.residual_reduced(x, iset)
    norm = float(np.linalg.norm(f))
    norm0 = norm if norm0_ref is None else norm0_ref
    history = [
        IterationRecord(
            k=0,
            set_size=iset.size,
            residual_norm=norm,
            global_residual_norm=norm if iset.is_full else None,
            eta=0.0,
            linear_iters=0,
            lam=1.0,
            phase=phase,
        )
    ]

    if forcing_state is not None:
        eta_prev, norm_prev = forcing_state
    else:
        eta_prev, norm_prev = None, None
    last_update_full: np.ndarray | None = None

    if converged(norm, norm0, cfg):
        return NewtonResult(
            history, SolveStatus.CONVERGED, f, norm, None,
            (eta_prev, norm_prev) if eta_prev is not None else None,
        )

    threshold = cfg.tau_abs + cfg.tau_rel * norm0
    status = SolveStatus.MAX_ITERS
    for k in range(1, min(budget, cfg.max_iters) + 1):
        first = eta_prev is None
        eta = forcing_eta(norm, norm_prev if not first else 0.0, eta_prev or 0.0, cfg, first)
        # Oversolve guard: once within reach of the convergence threshold,
        # the linear solve only needs to close half the remaining gap.
        eta = max(eta, min(cfg.forcing.eta_max, 0.5 * threshold / norm))
        eta_prev, norm_prev = eta, norm

        op = JfnkOperator(problem, iset, x, base_f=f)
        try:
            dx, stats = gmres_solve(op, -f, replace(cfg.gmres, rtol=eta))
        except ResidualOverflowError:
            status = SolveStatus.LINEAR_FAILURE
            break
        if (not stats.converged and stats.final_relative_residual >= 1.0 - 1e-12) or not np.any(dx):
            status = SolveStatus.LINEAR_FAILURE
            break

        lam, f_new, ls_failed = line_search(problem, iset, x, dx, norm, cfg)
        scatter_update(x, iset, dx, lam)
        full_update = np.zeros(problem.n)
        scatter_update(full_update, iset, dx, lam)
        last_update_full = full_update

        f = f_new
        norm = float(np.linalg.norm(f))
        history.append(
            IterationRecord(
                k=k,
                set_size=iset.size,
                residual_norm=norm,
                global_residual_norm=norm if iset.is_full else None,
                eta=eta,
                linear_iters=stats.iterations,
                lam=lam,
                ls_failed=ls_failed,
                phase=phase,
            )
        )
        if converged(norm, norm0, cfg):
            status = SolveStatus.CONVERGED
            break

    return NewtonResult(
        history, status, f, norm, last_update_full,
        (eta_prev, norm_prev) if eta_prev is not None else None,
    )
