"""Three-layer index structure for runtime set reduction.

A :class:`LayeredIndexSet` tracks which unknowns of a structured grid belong
to the active (local) set. It keeps three layers:

* the *flag* layer: one boolean per global unknown,
* the *absolute* layer: the sorted global indices of the members (the
  member-index vector used to scatter reduced updates, a.k.a. ``setvec``),
* the *relative* layer: the contiguous 1-based position of each member
  within the set, in row-major scan order.

On top of the layers sits the per-row set tree (row index plus the list of
member positions within that row), which lets residual kernels loop over
members without any membership test in the inner loop.

All externally visible indices (``setvec``, trace lines, ``rows``) are
1-based; internal numpy arrays holding absolute indices are 0-based.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "GridMap",
    "LayeredIndexSet",
    "full_set",
    "build_from_flags",
    "gather",
    "scatter_update",
    "settrace_line",
]


@dataclass(frozen=True)
class GridMap:
    """Structured ni x nj grid with ``dof_per_node`` unknowns per node.

    Node (i, j), both 1-based, has absolute node index (j-1)*ni + i; with
    interleaved dofs the unknown index is (node-1)*dof_per_node + d.
    """

    ni: int
    nj: int = 1
    dof_per_node: int = 1

    def __post_init__(self):
        if self.ni < 1 or self.nj < 1 or self.dof_per_node < 1:
            raise ValueError(
                f"grid dimensions must be >= 1, got ni={self.ni}, nj={self.nj}, "
                f"dof_per_node={self.dof_per_node}"
            )

    @property
    def n_unknowns(self) -> int:
        return self.ni * self.nj * self.dof_per_node

    @property
    def row_width(self) -> int:
        """Unknowns per grid row (j level)."""
        return self.ni * self.dof_per_node

    def node_index(self, i: int, j: int) -> int:
        """1-based absolute node index of node (i, j), both 1-based."""
        if not (1 <= i <= self.ni and 1 <= j <= self.nj):
            raise ValueError(f"node ({i}, {j}) outside {self.ni}x{self.nj} grid")
        return (j - 1) * self.ni + i


@dataclass(frozen=True)
class LayeredIndexSet:
    """Immutable membership structure built by :func:`build_from_flags`.

    ``members`` is the absolute layer as 0-based sorted indices; ``relative``
    maps every global unknown (0-based position) to its 1-based slot in the
    set, 0 for non-members. ``row_j`` / ``row_ptr`` / ``row_i`` encode the set
    tree in CSR form: row r covers members ``row_ptr[r]:row_ptr[r+1]`` whose
    1-based within-row positions are ``row_i`` (equal to the node column i
    when dof_per_node == 1).
    """

    grid: GridMap
    flags: np.ndarray = field(repr=False)
    members: np.ndarray = field(repr=False)
    relative: np.ndarray = field(repr=False)
    row_j: np.ndarray = field(repr=False)
    row_ptr: np.ndarray = field(repr=False)
    row_i: np.ndarray = field(repr=False)

    @property
    def size(self) -> int:
        return int(self.members.size)

    def __len__(self) -> int:
        return self.size

    @property
    def is_full(self) -> bool:
        return self.size == self.grid.n_unknowns

    @property
    def setvec(self) -> np.ndarray:
        """1-based absolute indices of the members, ascending."""
        return self.members + 1

    @property
    def rows(self) -> list[tuple[int, list[int]]]:
        """Set tree as (j, member positions within row j) pairs, 1-based."""
        out = []
        for r, j in enumerate(self.row_j):
            lo, hi = self.row_ptr[r], self.row_ptr[r + 1]
            out.append((int(j), [int(i) for i in self.row_i[lo:hi]]))
        return out

    def __repr__(self) -> str:  # keep dataclass arrays out of test output
        return (
            f"LayeredIndexSet(grid={self.grid.ni}x{self.grid.nj}"
            f"x{self.grid.dof_per_node}, size={self.size})"
        )


def build_from_flags(flags, grid: GridMap) -> LayeredIndexSet:
    """Construct the layered set from a boolean membership vector.

    Rows with no member are absent from the set tree; relative indices are
    assigned contiguously 1..size in row-major scan order. An all-false flag
    vector yields a legal empty set.
    """
    flag_arr = np.ascontiguousarray(np.asarray(flags, dtype=bool).ravel())
    if flag_arr.size != grid.n_unknowns:
        raise ValueError(
            f"flag vector has {flag_arr.size} entries, grid has {grid.n_unknowns}"
        )
    members = np.flatnonzero(flag_arr).astype(np.int64)
    relative = np.zeros(grid.n_unknowns, dtype=np.int64)
    relative[members] = np.arange(1, members.size + 1, dtype=np.int64)

    width = grid.row_width
    row_of = members // width  # sorted because members is sorted
    row_j, starts = np.unique(row_of, return_index=True)
    row_ptr = np.append(starts, members.size).astype(np.int64)
    row_i = (members % width + 1).astype(np.int64)

    return LayeredIndexSet(
        grid=grid,
        flags=flag_arr,
        members=members,
        relative=relative,
        row_j=(row_j + 1).astype(np.int64),
        row_ptr=row_ptr,
        row_i=row_i,
    )


def full_set(grid: GridMap) -> LayeredIndexSet:
    """Set containing every unknown; reduces all set machinery to a no-op."""
    return build_from_flags(np.ones(grid.n_unknowns, dtype=bool), grid)


def gather(full: np.ndarray, iset: LayeredIndexSet) -> np.ndarray:
    """Restrict a full-length vector to the set members (scan order)."""
    full = np.asarray(full)
    if full.shape != (iset.grid.n_unknowns,):
        raise ValueError(
            f"expected vector of length {iset.grid.n_unknowns}, got shape {full.shape}"
        )
    return full[iset.members]


def scatter_update(
    full: np.ndarray, iset: LayeredIndexSet, delta: np.ndarray, lam: float = 1.0
) -> np.ndarray:
    """Apply ``full[members] += lam * delta`` in place and return ``full``.

    Non-member entries are never touched, so they stay bit-identical. The
    caller owns the vector; pass a copy to evaluate trial points.
    """
    if full.shape != (iset.grid.n_unknowns,):
        raise ValueError(
            f"expected vector of length {iset.grid.n_unknowns}, got shape {full.shape}"
        )
    delta = np.asarray(delta)
    if delta.shape != (iset.size,):
        raise ValueError(f"expected update of length {iset.size}, got shape {delta.shape}")
    if not 0.0 <= lam <= 1.0:
        raise ValueError(f"damping factor must lie in (0, 1], got {lam}")
    full[iset.members] += lam * delta
    return full


def settrace_line(iset: LayeredIndexSet, iteration: int) -> str:
    """One trace line per set formation (CSV row, 1-based member indices)."""
    sv = iset.setvec
    if sv.size == 0:
        return f"{iteration},0,,,"
    body = ";".join(str(int(v)) for v in sv)
    return f"{iteration},{sv.size},{int(sv[0])},{int(sv[-1])},{body}"
