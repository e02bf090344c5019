"""Nonlinear problem contract and the shipped discretized test problems.

A problem exposes the full residual and a set-restricted residual over a
:class:`~setnewton.indexset.LayeredIndexSet`; the restricted evaluation must
equal ``gather(residual_full(x), set)`` exactly, with frozen (non-member)
unknowns entering as constants through the stencil.
"""

from __future__ import annotations

import abc
import math

import numpy as np

from . import _kernels
from .indexset import GridMap, LayeredIndexSet, gather

__all__ = [
    "NonlinearProblem",
    "SpikeBvp1D",
    "Demo2DPoisson",
    "spike_exact",
    "make_problem",
]


class NonlinearProblem(abc.ABC):
    """Contract for a discretized nonlinear system f(x) = 0.

    Subclasses set ``grid`` and implement :meth:`residual_full`; the default
    :meth:`residual_reduced` restricts the full residual, which is correct
    for any problem but costs a full evaluation. Shipped problems override
    it with a set-tree loop that only touches member equations.
    """

    grid: GridMap

    @property
    def n(self) -> int:
        return self.grid.n_unknowns

    @abc.abstractmethod
    def residual_full(self, u: np.ndarray) -> np.ndarray:
        """Residual of every equation at iterate ``u`` (length N)."""

    def residual_reduced(self, u: np.ndarray, iset: LayeredIndexSet) -> np.ndarray:
        return gather(self.residual_full(u), iset)

    def exact_nodal(self) -> np.ndarray | None:
        """Analytic solution sampled at the nodes, when one is known."""
        return None

    def _check_input(self, u) -> np.ndarray:
        u = np.asarray(u, dtype=float)
        if u.shape != (self.n,):
            raise ValueError(f"expected iterate of length {self.n}, got shape {u.shape}")
        return u


def spike_exact(x: float) -> float:
    """Analytic solution of the spike problem, 1000*exp(-((x-0.5)/0.01)^2)."""
    t = (x - 0.5) / 0.01
    return 1e3 * math.exp(-t * t)


class SpikeBvp1D(NonlinearProblem):
    """Two-point boundary value problem with a sharp interior spike.

    -u'' + u^3 + (4e8 (x-0.5)^2 - 2e4) u = 1e9 exp(-3 ((x-0.5)/0.01)^2)
    on (0, 1) with u(0) = u(1) = 0, discretized with second-order central
    differences on ``n`` interior nodes, h = 1/(n+1), x_i = i*h. The analytic
    solution peaks at 1000 at x = 0.5; the source underflows to zero away
    from the spike, which is the intended limit.
    """

    def __init__(self, n: int):
        if n < 1:
            raise ValueError(f"need at least one interior node, got n={n}")
        self.grid = GridMap(ni=n)
        self.h = 1.0 / (n + 1)
        self.x = np.arange(1, n + 1, dtype=float) * self.h
        self.inv_h2 = 1.0 / (self.h * self.h)
        t = self.x - 0.5
        self.coef = 4e8 * t * t - 2e4
        self.src = 1e9 * np.exp(-3.0 * (t / 0.01) ** 2)

    def residual_full(self, u):
        u = self._check_input(u)
        out = np.empty(self.n)
        if _kernels.NUMBA_ENABLED:
            _kernels.spike_full_numba(u, self.inv_h2, self.coef, self.src, out)
        else:
            _kernels.spike_full_numpy(u, self.inv_h2, self.coef, self.src, out)
        return out

    def residual_reduced(self, u, iset):
        u = self._check_input(u)
        if iset.grid.n_unknowns != self.n:
            raise ValueError("index set was built for a different grid")
        out = np.empty(iset.size)
        if _kernels.NUMBA_ENABLED:
            _kernels.spike_reduced_numba(
                u, iset.members, self.inv_h2, self.coef, self.src, out
            )
        else:
            _kernels.spike_reduced_numpy(
                u, iset.members, self.inv_h2, self.coef, self.src, out
            )
        return out

    def exact_nodal(self):
        t = (self.x - 0.5) / 0.01
        return 1e3 * np.exp(-t * t)


class Demo2DPoisson(NonlinearProblem):
    """Nonlinear Poisson demo, -Lap(u) + u^3 = s, zero Dirichlet boundary.

    The source is manufactured so that u(x, y) = sin(pi x) sin(pi y) solves
    the continuous problem; it mainly exercises the two-dimensional set tree.
    """

    def __init__(self, ni: int, nj: int | None = None):
        nj = ni if nj is None else nj
        if ni < 1 or nj < 1:
            raise ValueError(f"need at least one interior node per direction, got {ni}x{nj}")
        self.grid = GridMap(ni=ni, nj=nj)
        self.hx = 1.0 / (ni + 1)
        self.hy = 1.0 / (nj + 1)
        self.inv_hx2 = 1.0 / (self.hx * self.hx)
        self.inv_hy2 = 1.0 / (self.hy * self.hy)
        x = np.arange(1, ni + 1, dtype=float) * self.hx
        y = np.arange(1, nj + 1, dtype=float) * self.hy
        xg, yg = np.meshgrid(x, y)  # row-major: index (j, i)
        ustar = np.sin(np.pi * xg) * np.sin(np.pi * yg)
        self._ustar = ustar.ravel()
        self.src = (2.0 * np.pi**2 * ustar + ustar**3).ravel()

    def residual_full(self, u):
        u = self._check_input(u)
        out = np.empty(self.n)
        ni, nj = self.grid.ni, self.grid.nj
        if _kernels.NUMBA_ENABLED:
            _kernels.demo2d_full_numba(
                u, ni, nj, self.inv_hx2, self.inv_hy2, self.src, out
            )
        else:
            _kernels.demo2d_full_numpy(
                u, ni, nj, self.inv_hx2, self.inv_hy2, self.src, out
            )
        return out

    def residual_reduced(self, u, iset):
        u = self._check_input(u)
        if iset.grid.n_unknowns != self.n:
            raise ValueError("index set was built for a different grid")
        out = np.empty(iset.size)
        ni, nj = self.grid.ni, self.grid.nj
        if _kernels.NUMBA_ENABLED:
            _kernels.demo2d_reduced_numba(
                u, iset.row_j, iset.row_ptr, iset.row_i,
                ni, nj, self.inv_hx2, self.inv_hy2, self.src, out,
            )
        else:
            _kernels.demo2d_reduced_numpy(
                u, iset.members, ni, nj, self.inv_hx2, self.inv_hy2, self.src, out
            )
        return out

    def exact_nodal(self):
        return self._ustar.copy()


def make_problem(name: str, n: int) -> NonlinearProblem:
    """Problem factory used by the CLI: 'spike1d' or 'demo2d'."""
    if name == "spike1d":
        return SpikeBvp1D(n)
    if name == "demo2d":
        return Demo2DPoisson(n, n)
    raise ValueError(f"unknown problem {name!r} (expected 'spike1d' or 'demo2d')")
