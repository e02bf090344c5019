"""Kernel backend selection.

The stencil kernels ship in two flavours: numba-jitted loops and pure-numpy
vectorized code. The env var ``SETNEWTON_NUMBA`` picks the backend at import
time ("0"/"false"/"off" forces the numpy path); when numba is not importable
the numpy path is used regardless. Both implementations always exist so the
benchmark harness can time them side by side.
"""

import os

try:
    import numba  # noqa: F401

    _HAVE_NUMBA = True
except ImportError:  # pragma: no cover - exercised only without numba
    _HAVE_NUMBA = False

_flag = os.environ.get("SETNEWTON_NUMBA", "1").strip().lower()

# Which backend the solvers use; the jitted kernels are still defined (and
# benchmarkable) when only the flag, not the import, rules numba out.
NUMBA_ENABLED = _HAVE_NUMBA and _flag not in {"0", "false", "no", "off"}


def njit_or_none(func):
    """Return an njit-compiled version of *func*, or None without numba."""
    if not _HAVE_NUMBA:
        return None
    from numba import njit

    return njit(cache=True)(func)
