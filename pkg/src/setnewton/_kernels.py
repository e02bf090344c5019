"""Residual stencil kernels, numba-jitted loops plus pure-numpy fallbacks.

Every kernel exists twice: a loop version (compiled with numba when the
backend is enabled, see :mod:`setnewton._accel`) and a vectorized numpy
version. Both spell the per-component arithmetic in the same order, so the
two backends, and full versus set-restricted evaluation, agree bit for bit.
Reduced kernels walk the set tree (rows, then member positions) and never
test membership inside the loop; neighbours outside the set are read from
the full iterate, Dirichlet boundaries enter as literal zeros.

``out`` buffers are caller-allocated so the hot path never allocates.
"""

from __future__ import annotations

import numpy as np

from ._accel import NUMBA_ENABLED, njit_or_none

__all__ = [
    "NUMBA_ENABLED",
    "spike_full_numpy",
    "spike_reduced_numpy",
    "demo2d_full_numpy",
    "demo2d_reduced_numpy",
    "spike_full_numba",
    "spike_reduced_numba",
    "demo2d_full_numba",
    "demo2d_reduced_numba",
    "warmup",
]


# ---------------------------------------------------------------------------
# 1D spike problem: (2u_i - u_{i-1} - u_{i+1})/h^2 + u_i^3 + coef_i*u_i - src_i
# ---------------------------------------------------------------------------

def _spike_full_loop(u, inv_h2, coef, src, out):
    n = u.shape[0]
    for i in range(n):
        ul = u[i - 1] if i > 0 else 0.0
        ur = u[i + 1] if i < n - 1 else 0.0
        out[i] = (2.0 * u[i] - ul - ur) * inv_h2 + u[i] * u[i] * u[i] + coef[i] * u[i] - src[i]


def _spike_reduced_loop(u, members, inv_h2, coef, src, out):
    n = u.shape[0]
    for k in range(members.shape[0]):
        g = members[k]
        ul = u[g - 1] if g > 0 else 0.0
        ur = u[g + 1] if g < n - 1 else 0.0
        out[k] = (2.0 * u[g] - ul - ur) * inv_h2 + u[g] * u[g] * u[g] + coef[g] * u[g] - src[g]


def spike_full_numpy(u, inv_h2, coef, src, out):
    n = u.shape[0]
    up = np.zeros(n + 2)
    up[1:-1] = u
    out[:] = (2.0 * u - up[:-2] - up[2:]) * inv_h2 + u * u * u + coef * u - src
    return out


def spike_reduced_numpy(u, members, inv_h2, coef, src, out):
    n = u.shape[0]
    m = members
    um = u[m]
    ul = np.where(m > 0, u[np.maximum(m - 1, 0)], 0.0)
    ur = np.where(m < n - 1, u[np.minimum(m + 1, n - 1)], 0.0)
    out[:] = (2.0 * um - ul - ur) * inv_h2 + um * um * um + coef[m] * um - src[m]
    return out


# ---------------------------------------------------------------------------
# 2D demo problem: 5-point Laplacian + u^3 - src on an ni x nj interior grid
# ---------------------------------------------------------------------------

def _demo2d_full_loop(u, ni, nj, inv_hx2, inv_hy2, src, out):
    for j in range(nj):
        base = j * ni
        for i in range(ni):
            g = base + i
            uw = u[g - 1] if i > 0 else 0.0
            ue = u[g + 1] if i < ni - 1 else 0.0
            us = u[g - ni] if j > 0 else 0.0
            un = u[g + ni] if j < nj - 1 else 0.0
            out[g] = (
                (2.0 * u[g] - uw - ue) * inv_hx2
                + (2.0 * u[g] - us - un) * inv_hy2
                + u[g] * u[g] * u[g]
                - src[g]
            )


def _demo2d_reduced_loop(u, row_j, row_ptr, row_i, ni, nj, inv_hx2, inv_hy2, src, out):
    for r in range(row_j.shape[0]):
        j = row_j[r] - 1
        base = j * ni
        for p in range(row_ptr[r], row_ptr[r + 1]):
            i = row_i[p] - 1
            g = base + i
            uw = u[g - 1] if i > 0 else 0.0
            ue = u[g + 1] if i < ni - 1 else 0.0
            us = u[g - ni] if j > 0 else 0.0
            un = u[g + ni] if j < nj - 1 else 0.0
            out[p] = (
                (2.0 * u[g] - uw - ue) * inv_hx2
                + (2.0 * u[g] - us - un) * inv_hy2
                + u[g] * u[g] * u[g]
                - src[g]
            )


def demo2d_full_numpy(u, ni, nj, inv_hx2, inv_hy2, src, out):
    up = np.zeros((nj + 2, ni + 2))
    up[1:-1, 1:-1] = u.reshape(nj, ni)
    c = up[1:-1, 1:-1]
    res = (
        (2.0 * c - up[1:-1, :-2] - up[1:-1, 2:]) * inv_hx2
        + (2.0 * c - up[:-2, 1:-1] - up[2:, 1:-1]) * inv_hy2
        + c * c * c
        - src.reshape(nj, ni)
    )
    out[:] = res.ravel()
    return out


def demo2d_reduced_numpy(u, members, ni, nj, inv_hx2, inv_hy2, src, out):
    m = members
    i = m % ni
    j = m // ni
    um = u[m]
    uw = np.where(i > 0, u[np.maximum(m - 1, 0)], 0.0)
    ue = np.where(i < ni - 1, u[np.minimum(m + 1, ni * nj - 1)], 0.0)
    us = np.where(j > 0, u[np.maximum(m - ni, 0)], 0.0)
    un = np.where(j < nj - 1, u[np.minimum(m + ni, ni * nj - 1)], 0.0)
    out[:] = (
        (2.0 * um - uw - ue) * inv_hx2
        + (2.0 * um - us - un) * inv_hy2
        + um * um * um
        - src[m]
    )
    return out


spike_full_numba = njit_or_none(_spike_full_loop)
spike_reduced_numba = njit_or_none(_spike_reduced_loop)
demo2d_full_numba = njit_or_none(_demo2d_full_loop)
demo2d_reduced_numba = njit_or_none(_demo2d_reduced_loop)


def warmup():
    """Trigger jit compilation of every kernel (no-op without numba)."""
    if spike_full_numba is None:
        return
    u = np.zeros(4)
    members = np.array([1, 2], dtype=np.int64)
    aux = np.zeros(4)
    out = np.zeros(4)
    spike_full_numba(u, 1.0, aux, aux, out)
    spike_reduced_numba(u, members, 1.0, aux, aux, out[:2])
    u2 = np.zeros(6)
    src2 = np.zeros(6)
    out2 = np.zeros(6)
    demo2d_full_numba(u2, 3, 2, 1.0, 1.0, src2, out2)
    row_j = np.array([1], dtype=np.int64)
    row_ptr = np.array([0, 2], dtype=np.int64)
    row_i = np.array([1, 3], dtype=np.int64)
    demo2d_reduced_numba(u2, row_j, row_ptr, row_i, 3, 2, 1.0, 1.0, src2, out2[:2])
