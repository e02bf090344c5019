"""Matrix-free Newton-GMRES with runtime active-set reduction.

Unknowns whose residual already satisfies an intermediate tolerance are
frozen, and Newton iterations continue on a smaller local set tracked by a
three-layer index structure. The package ships the solver stack (index
sets, selection rules, matrix-free GMRES, damped inexact Newton, the set
algorithm and its single-series variant), two discretized test problems,
and a CLI harness producing convergence histories and comparison tables.
"""

from .driver import (
    SetSolveConfig,
    SetSolveResult,
    SetVariant,
    plain_newton,
    set_algorithm,
    set_algorithm_variant,
    solve,
)
from .indexset import (
    GridMap,
    LayeredIndexSet,
    build_from_flags,
    full_set,
    gather,
    scatter_update,
    settrace_line,
)
from .krylov import (
    EPS_CONST,
    GmresConfig,
    GmresStats,
    JfnkOperator,
    ResidualOverflowError,
    choose_epsilon,
    gmres_solve,
)
from .newton import (
    ForcingConfig,
    IterationRecord,
    LineSearchConfig,
    NewtonConfig,
    NewtonResult,
    SolveStatus,
    converged,
    forcing_eta,
    line_search,
    newton_solve,
)
from .problems import Demo2DPoisson, NonlinearProblem, SpikeBvp1D, make_problem, spike_exact
from .setrules import (
    RuleConfig,
    RuleKind,
    flags_residual_mean,
    flags_residual_rms,
    flags_step_size,
    mean_abs,
    rms_norm,
    select_flags,
)

__version__ = "0.1.0"

__all__ = [
    "GridMap",
    "LayeredIndexSet",
    "full_set",
    "build_from_flags",
    "gather",
    "scatter_update",
    "settrace_line",
    "RuleKind",
    "RuleConfig",
    "rms_norm",
    "mean_abs",
    "flags_residual_rms",
    "flags_residual_mean",
    "flags_step_size",
    "select_flags",
    "NonlinearProblem",
    "SpikeBvp1D",
    "Demo2DPoisson",
    "spike_exact",
    "make_problem",
    "EPS_CONST",
    "ResidualOverflowError",
    "choose_epsilon",
    "JfnkOperator",
    "GmresConfig",
    "GmresStats",
    "gmres_solve",
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
    "SetVariant",
    "SetSolveConfig",
    "SetSolveResult",
    "plain_newton",
    "set_algorithm",
    "set_algorithm_variant",
    "solve",
    "__version__",
]
