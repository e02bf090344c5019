import numpy as np
import pytest

from setnewton import GridMap, NonlinearProblem, gather
from setnewton import _kernels


@pytest.fixture(scope="session", autouse=True)
def warm_kernels():
    # compile the jitted kernels once so timed tests never include jit cost
    _kernels.warmup()


class LinearProblem(NonlinearProblem):
    """f(x) = A x - b on a 1 x n grid; reduced evaluation via restriction."""

    def __init__(self, A, b):
        A = np.asarray(A, dtype=float)
        b = np.asarray(b, dtype=float)
        assert A.shape[0] == A.shape[1] == b.size
        self.A = A
        self.b = b
        self.grid = GridMap(ni=b.size)

    def residual_full(self, u):
        return self.A @ np.asarray(u, dtype=float) - self.b


class ScalarProblem(NonlinearProblem):
    """Single-unknown problem f(u) = fn(u), for line-search oracles."""

    def __init__(self, fn):
        self.fn = fn
        self.grid = GridMap(ni=1)

    def residual_full(self, u):
        return np.array([self.fn(float(u[0]))])


class CountingProblem(NonlinearProblem):
    """Wrapper counting residual evaluations of an inner problem."""

    def __init__(self, inner):
        self.inner = inner
        self.grid = inner.grid
        self.full_calls = 0
        self.reduced_calls = 0

    def residual_full(self, u):
        self.full_calls += 1
        return self.inner.residual_full(u)

    def residual_reduced(self, u, iset):
        self.reduced_calls += 1
        return self.inner.residual_reduced(u, iset)

    def exact_nodal(self):
        return self.inner.exact_nodal()


def dense_fd_jacobian(problem, x):
    """Independent dense Jacobian oracle: one-sided differencing per column
    with a per-column step sqrt(eps)*(1+|x_j|)."""
    x = np.asarray(x, dtype=float)
    n = x.size
    f0 = problem.residual_full(x)
    J = np.empty((n, n))
    root_eps = np.sqrt(np.finfo(float).eps)
    for j in range(n):
        step = root_eps * (1.0 + abs(x[j]))
        xp = x.copy()
        xp[j] += step
        J[:, j] = (problem.residual_full(xp) - f0) / step
    return J


def componentwise_rel_err(a, b):
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    diff = np.abs(a - b)
    scale = np.maximum(np.abs(a), np.abs(b))
    out = np.zeros_like(diff)
    nz = diff > 0
    out[nz] = diff[nz] / scale[nz]
    return out


def fig1_flags():
    """5x5 membership pattern whose member vector is
    [1,2,6,7,8,9,13,14,22,23,24] (row j=4 empty)."""
    grid = GridMap(5, 5)
    flags = np.zeros(25, dtype=bool)
    for j, cols in [(1, (1, 2)), (2, (1, 2, 3, 4)), (3, (3, 4)), (5, (2, 3, 4))]:
        for i in cols:
            flags[grid.node_index(i, j) - 1] = True
    return flags, grid


def random_flags_set(rng, grid):
    from setnewton import build_from_flags

    flags = rng.random(grid.n_unknowns) < rng.uniform(0.1, 0.9)
    return build_from_flags(flags, grid)


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


def assert_restriction_equal(problem, u, iset, tol=1e-14):
    full = gather(problem.residual_full(u), iset)
    red = problem.residual_reduced(u, iset)
    err = componentwise_rel_err(full, red)
    assert err.max(initial=0.0) <= tol
