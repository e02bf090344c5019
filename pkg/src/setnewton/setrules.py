"""Selection rules that decide which unknowns stay in the active set.

Two residual-based rules (compare each |f_i| against alpha times the RMS or
the mean of the residual magnitudes) and a step-based rule (keep unknowns
whose last update is at least as large as the unknown itself). The combined
modes OR a residual rule with the step rule so a large update keeps an
unknown in the set even when its residual already looks converged.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "RuleKind",
    "RuleConfig",
    "rms_norm",
    "mean_abs",
    "flags_residual_rms",
    "flags_residual_mean",
    "flags_step_size",
    "select_flags",
]


class RuleKind(str, enum.Enum):
    RESIDUAL_RMS = "residual_rms"
    RESIDUAL_MEAN = "residual_mean"
    STEP = "step"
    RESIDUAL_RMS_OR_STEP = "residual_rms_or_step"
    RESIDUAL_MEAN_OR_STEP = "residual_mean_or_step"


@dataclass(frozen=True)
class RuleConfig:
    """Rule choice plus its tolerance control.

    ``alpha`` scales the residual threshold (smaller alpha keeps more
    unknowns). ``min_set_size`` is an optional floor: when the rule selects
    fewer unknowns, the floor many largest-|f| unknowns are flagged instead
    (0 disables the floor).
    """

    kind: RuleKind = RuleKind.RESIDUAL_MEAN
    alpha: float = 0.01
    min_set_size: int = 0

    def __post_init__(self):
        if not 0.0 < self.alpha <= 1.0:
            raise ValueError(f"alpha must lie in (0, 1], got {self.alpha}")
        if self.min_set_size < 0:
            raise ValueError(f"min_set_size must be >= 0, got {self.min_set_size}")


def _as_vector(f) -> np.ndarray:
    f = np.asarray(f, dtype=float).ravel()
    if f.size == 0:
        raise ValueError("empty residual vector")
    return f


def rms_norm(f) -> float:
    """sqrt(mean(f_i^2))."""
    f = _as_vector(f)
    return math.sqrt(float(np.dot(f, f)) / f.size)


def mean_abs(f) -> float:
    """mean(|f_i|)."""
    f = _as_vector(f)
    return float(np.sum(np.abs(f))) / f.size


def _threshold_flags(f: np.ndarray, threshold: float) -> np.ndarray:
    # An exactly-zero residual vector selects nothing: every unknown already
    # satisfies the system, so membership is left to the caller's fallback.
    if threshold == 0.0 and not np.any(f):
        return np.zeros(f.size, dtype=bool)
    return np.abs(f) >= threshold


def flags_residual_rms(f, alpha: float) -> np.ndarray:
    """Keep unknown i when |f_i| >= alpha * rms(f) (ties are members)."""
    f = _as_vector(f)
    return _threshold_flags(f, alpha * rms_norm(f))


def flags_residual_mean(f, alpha: float) -> np.ndarray:
    """Keep unknown i when |f_i| >= alpha * mean(|f|) (ties are members)."""
    f = _as_vector(f)
    return _threshold_flags(f, alpha * mean_abs(f))


def flags_step_size(dx, x) -> np.ndarray:
    """Keep unknown i when the update dominates it: |dx_i| >= |x_i|."""
    dx = np.asarray(dx, dtype=float).ravel()
    x = np.asarray(x, dtype=float).ravel()
    if dx.shape != x.shape:
        raise ValueError(f"dx has shape {dx.shape}, x has shape {x.shape}")
    return np.abs(dx) >= np.abs(x)


def select_flags(f, dx, x, cfg: RuleConfig) -> np.ndarray:
    """Apply the configured rule and the min_set_size floor.

    ``f`` is the current full residual, ``dx`` the last applied full-length
    update (zeros where nothing moved) and ``x`` the current iterate.
    """
    f = _as_vector(f)
    dx = np.asarray(dx, dtype=float).ravel()
    x = np.asarray(x, dtype=float).ravel()
    if not (f.shape == dx.shape == x.shape):
        raise ValueError(
            f"inconsistent shapes: f {f.shape}, dx {dx.shape}, x {x.shape}"
        )

    kind = cfg.kind
    if kind == RuleKind.RESIDUAL_RMS:
        flags = flags_residual_rms(f, cfg.alpha)
    elif kind == RuleKind.RESIDUAL_MEAN:
        flags = flags_residual_mean(f, cfg.alpha)
    elif kind == RuleKind.STEP:
        flags = flags_step_size(dx, x)
    elif kind == RuleKind.RESIDUAL_RMS_OR_STEP:
        flags = flags_residual_rms(f, cfg.alpha) | flags_step_size(dx, x)
    elif kind == RuleKind.RESIDUAL_MEAN_OR_STEP:
        flags = flags_residual_mean(f, cfg.alpha) | flags_step_size(dx, x)
    else:  # pragma: no cover - enum is closed
        raise ValueError(f"unknown rule kind {kind!r}")

    floor = min(cfg.min_set_size, f.size)
    if 0 < floor and int(np.count_nonzero(flags)) < floor:
        # Largest |f_i| win; stable sort keeps the lowest index on ties.
        order = np.argsort(-np.abs(f), kind="stable")
        flags = np.zeros(f.size, dtype=bool)
        flags[order[:floor]] = True
    return flags
