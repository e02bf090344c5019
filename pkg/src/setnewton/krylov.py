"""Matrix-free linear algebra: directional-difference products and GMRES.

The Jacobian is never formed. :class:`JfnkOperator` realizes the action of
the Jacobian submatrix restricted to an active set by differencing the
reduced residual along the perturbed members; perturbing only members is
exactly the submatrix action because non-member columns are never excited.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .indexset import LayeredIndexSet, gather, scatter_update
from .problems import NonlinearProblem

__all__ = [
    "EPS_CONST",
    "ResidualOverflowError",
    "choose_epsilon",
    "JfnkOperator",
    "GmresConfig",
    "GmresStats",
    "gmres_solve",
]

EPS_CONST = math.sqrt(np.finfo(float).eps)

_BREAKDOWN_RTOL = 1e-12


class ResidualOverflowError(RuntimeError):
    """Residual evaluation produced non-finite values during differencing."""


def choose_epsilon(x_set: np.ndarray, v: np.ndarray, eps_const: float = EPS_CONST) -> float:
    """Perturbation size eps = eps_const * (1 + ||x||) / ||v|| (positive, finite)."""
    vnorm = float(np.linalg.norm(v))
    if vnorm == 0.0:
        raise ValueError("cannot choose a perturbation size for v = 0")
    return eps_const * (1.0 + float(np.linalg.norm(x_set))) / vnorm


class JfnkOperator:
    """Action of the reduced Jacobian at a frozen iterate, by differencing.

    One reduced-residual evaluation per product:

        J v ~= (f(x + eps*v) - f(x)) / eps

    where the perturbation is scattered onto set members only. The operator
    keeps an internal scratch vector, so a single instance must not be shared
    across simultaneous products; clone per thread instead.
    """

    def __init__(
        self,
        problem: NonlinearProblem,
        iset: LayeredIndexSet,
        base_x: np.ndarray,
        base_f: np.ndarray | None = None,
        eps_const: float = EPS_CONST,
    ):
        self.problem = problem
        self.iset = iset
        self.base_x = np.asarray(base_x, dtype=float).copy()
        if base_f is None:
            base_f = problem.residual_reduced(self.base_x, iset)
        self.base_f = np.asarray(base_f, dtype=float)
        if self.base_f.shape != (iset.size,):
            raise ValueError(
                f"base residual has shape {self.base_f.shape}, set has {iset.size} members"
            )
        self.eps_const = eps_const
        self._x_set_norm = float(np.linalg.norm(gather(self.base_x, iset)))
        self._scratch = np.empty_like(self.base_x)

    @property
    def n(self) -> int:
        return self.iset.size

    def apply(self, v: np.ndarray) -> np.ndarray:
        v = np.asarray(v, dtype=float)
        if v.shape != (self.n,):
            raise ValueError(f"expected vector of length {self.n}, got shape {v.shape}")
        vnorm = float(np.linalg.norm(v))
        if vnorm == 0.0:
            raise ValueError("directional difference undefined for v = 0")
        eps = self.eps_const * (1.0 + self._x_set_norm) / vnorm
        np.copyto(self._scratch, self.base_x)
        scatter_update(self._scratch, self.iset, eps * v, 1.0)
        f_pert = self.problem.residual_reduced(self._scratch, self.iset)
        out = (f_pert - self.base_f) / eps
        if not np.all(np.isfinite(out)):
            raise ResidualOverflowError(
                "non-finite residual while differencing; aborting linear solve"
            )
        return out

    __call__ = apply


@dataclass(frozen=True)
class GmresConfig:
    """Restart length, iteration budget, and relative residual target."""

    restart: int = 30
    max_total_iters: int = 200
    rtol: float = 1e-8

    def __post_init__(self):
        if self.restart < 1:
            raise ValueError(f"restart must be >= 1, got {self.restart}")
        if self.max_total_iters < self.restart:
            raise ValueError(
                f"max_total_iters ({self.max_total_iters}) must be >= restart ({self.restart})"
            )
        if self.rtol < 0.0:
            raise ValueError(f"rtol must be >= 0, got {self.rtol}")


@dataclass
class GmresStats:
    iterations: int
    final_relative_residual: float
    converged: bool
    breakdown: bool


def gmres_solve(op, rhs: np.ndarray, cfg: GmresConfig) -> tuple[np.ndarray, GmresStats]:
    """Restarted GMRES with modified Gram-Schmidt and Givens rotations.

    ``op`` is any callable mapping length-n vectors to length-n vectors.
    Every restart cycle starts from the zero correction; ``iterations``
    counts Arnoldi steps only. The reported relative residual is always
    recomputed from the returned iterate, never read off the rotation
    estimates, at the cost of one extra operator application.

    Breakdown (Arnoldi vector with ~zero norm) is flagged and ends the solve
    with the current iterate: at step k it means the exact solution lies in
    the Krylov space already built.
    """
    rhs = np.asarray(rhs, dtype=float)
    n = rhs.size
    if n < 1:
        raise ValueError("empty right-hand side")
    bnorm = float(np.linalg.norm(rhs))
    if bnorm == 0.0:
        return np.zeros(n), GmresStats(0, 0.0, True, False)
    if not math.isfinite(bnorm):
        # overflowed right-hand side: nothing a Krylov space can do
        return np.zeros(n), GmresStats(0, math.inf, False, False)

    m = min(cfg.restart, n)
    x = np.zeros(n)
    x_updated = False
    total = 0
    breakdown = False
    est_rel = 1.0

    V = np.empty((m + 1, n))
    H = np.zeros((m + 1, m))
    cs = np.zeros(m)
    sn = np.zeros(m)
    g = np.zeros(m + 1)

    while total < cfg.max_total_iters:
        r = rhs - op(x) if x_updated else rhs.copy()
        beta = float(np.linalg.norm(r))
        est_rel = beta / bnorm
        if est_rel <= cfg.rtol:
            break

        H[:] = 0.0
        g[:] = 0.0
        g[0] = beta
        V[0] = r / beta
        k = 0

        for j in range(m):
            if total >= cfg.max_total_iters:
                break
            w = op(V[j])
            total += 1
            wnorm0 = float(np.linalg.norm(w))
            for i in range(j + 1):
                hij = float(np.dot(V[i], w))
                H[i, j] = hij
                w -= hij * V[i]
            hnext = float(np.linalg.norm(w))

            for i in range(j):
                t = cs[i] * H[i, j] + sn[i] * H[i + 1, j]
                H[i + 1, j] = -sn[i] * H[i, j] + cs[i] * H[i + 1, j]
                H[i, j] = t
            denom = math.hypot(H[j, j], hnext)
            if denom == 0.0:
                # Operator annihilated the direction; drop the column.
                breakdown = True
                break
            cs[j] = H[j, j] / denom
            sn[j] = hnext / denom
            H[j, j] = denom
            g[j + 1] = -sn[j] * g[j]
            g[j] = cs[j] * g[j]
            k = j + 1

            if hnext <= _BREAKDOWN_RTOL * max(wnorm0, 1e-300):
                breakdown = True
                break
            est_rel = abs(g[k]) / bnorm
            if est_rel <= cfg.rtol:
                break
            V[j + 1] = w / hnext

        if k > 0:
            y = np.linalg.solve(H[:k, :k], g[:k])
            x = x + V[:k].T @ y
            x_updated = True
            est_rel = abs(g[k]) / bnorm

        if breakdown or est_rel <= cfg.rtol:
            break

    if x_updated:
        true_rel = float(np.linalg.norm(rhs - op(x))) / bnorm
    else:
        true_rel = est_rel
    return x, GmresStats(total, true_rel, true_rel <= cfg.rtol, breakdown)
