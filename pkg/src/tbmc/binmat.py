"""Sparse representation of a partially observed binary matrix.

The matrix stores only the observed entries (the mask Omega), sorted by
(row, col). That ordering is load-bearing: every downstream component
(LP variable order, pivoting, heuristics) iterates entries in this order,
which is what makes the whole pipeline deterministic.
"""

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, DuplicateEntry, EmptyRow, IndexOutOfRange


@dataclass
class Tile:
    """One binary rank-one pair: u selects rows, v selects columns."""

    u: np.ndarray
    v: np.ndarray

    def __post_init__(self):
        self.u = np.ascontiguousarray(self.u, dtype=np.uint8)
        self.v = np.ascontiguousarray(self.v, dtype=np.uint8)

    @property
    def is_empty(self):
        return not self.u.any() or not self.v.any()

    def __eq__(self, other):
        return (
            isinstance(other, Tile)
            and np.array_equal(self.u, other.u)
            and np.array_equal(self.v, other.v)
        )


class ObservedBinaryMatrix:
    """Immutable m x n binary matrix known only on a set of positions.

    Construction goes through :meth:`from_triplets` or :meth:`from_dense`;
    the raw constructor trusts its arguments. Instances are safe to share
    across worker processes.
    """

    __slots__ = ("n_rows", "n_cols", "rows", "cols", "bits", "row_ptr",
                 "_col_order", "_col_ptr")

    def __init__(self, n_rows, n_cols, rows, cols, bits):
        self.n_rows = int(n_rows)
        self.n_cols = int(n_cols)
        self.rows = rows
        self.cols = cols
        self.bits = bits
        self.row_ptr = np.searchsorted(rows, np.arange(n_rows + 1))
        # Secondary ordering by (col, row) for column access.
        order = np.lexsort((rows, cols))
        self._col_order = order
        self._col_ptr = np.searchsorted(cols[order], np.arange(n_cols + 1))

    @classmethod
    def from_triplets(cls, n_rows, n_cols, triplets):
        """Build a matrix from (row, col, bit) triples.

        Raises IndexOutOfRange for indices outside the declared shape and
        DuplicateEntry if the same (row, col) appears twice.
        """
        n_rows = int(n_rows)
        n_cols = int(n_cols)
        if n_rows < 0 or n_cols < 0:
            raise IndexOutOfRange(f"negative shape ({n_rows}, {n_cols})")
        arr = np.asarray(list(triplets), dtype=np.int64)
        if arr.size == 0:
            arr = arr.reshape(0, 3)
        rows, cols, bits = arr[:, 0], arr[:, 1], arr[:, 2]
        if len(rows):
            if rows.min() < 0 or rows.max() >= n_rows or cols.min() < 0 or cols.max() >= n_cols:
                bad = np.flatnonzero((rows < 0) | (rows >= n_rows) | (cols < 0) | (cols >= n_cols))[0]
                raise IndexOutOfRange(
                    f"entry ({rows[bad]}, {cols[bad]}) outside {n_rows} x {n_cols}")
            if ((bits != 0) & (bits != 1)).any():
                raise IndexOutOfRange("bit values must be 0 or 1")
        order = np.lexsort((cols, rows))
        rows, cols, bits = rows[order], cols[order], bits[order]
        if len(rows) > 1:
            same = (np.diff(rows) == 0) & (np.diff(cols) == 0)
            if same.any():
                k = np.flatnonzero(same)[0]
                raise DuplicateEntry(int(rows[k]), int(cols[k]))
        return cls(n_rows, n_cols, rows.astype(np.int64), cols.astype(np.int64),
                   bits.astype(np.int8))

    @classmethod
    def from_dense(cls, dense, observed=None):
        """Build from a dense 0/1 array; `observed` is an optional bool mask."""
        dense = np.asarray(dense)
        if observed is None:
            observed = np.ones(dense.shape, dtype=bool)
        rows, cols = np.nonzero(np.asarray(observed, dtype=bool))
        bits = dense[rows, cols].astype(np.int8)
        order = np.lexsort((cols, rows))
        return cls(dense.shape[0], dense.shape[1], rows[order].astype(np.int64),
                   cols[order].astype(np.int64), bits[order])

    @property
    def nnz(self):
        return len(self.rows)

    @property
    def n_ones(self):
        return int(np.count_nonzero(self.bits))

    def row_entries(self, i):
        "Observed (cols, bits) of row i, col-ascending."
        lo, hi = self.row_ptr[i], self.row_ptr[i + 1]
        return self.cols[lo:hi], self.bits[lo:hi]

    def col_entries(self, j):
        "Observed (rows, bits) of column j, row-ascending."
        lo, hi = self._col_ptr[j], self._col_ptr[j + 1]
        sel = self._col_order[lo:hi]
        return self.rows[sel], self.bits[sel]

    def to_dense(self):
        "Dense (values, observed-mask) pair; unobserved cells are 0."
        dense = np.zeros((self.n_rows, self.n_cols), dtype=np.int8)
        mask = np.zeros((self.n_rows, self.n_cols), dtype=bool)
        dense[self.rows, self.cols] = self.bits
        mask[self.rows, self.cols] = True
        return dense, mask

    def full_view(self):
        return RowSubsetView(self, np.arange(self.n_rows, dtype=np.int64))

    def __repr__(self):
        return f"ObservedBinaryMatrix({self.n_rows}x{self.n_cols}, nnz={self.nnz})"


class RowSubsetView:
    """Ordered subset of a parent matrix's rows; shares the parent's storage.

    `rows` holds parent row ids; local row i of the view is parent row
    rows[i]. Views always point at the root matrix, so splitting a view
    yields siblings of the same root.
    """

    __slots__ = ("parent", "rows")

    def __init__(self, parent, rows):
        if isinstance(parent, RowSubsetView):
            rows = parent.rows[rows]
            parent = parent.parent
        self.parent = parent
        self.rows = np.asarray(rows, dtype=np.int64)

    @property
    def n_rows(self):
        return len(self.rows)

    @property
    def n_cols(self):
        return self.parent.n_cols

    @property
    def is_full(self):
        return (len(self.rows) == self.parent.n_rows
                and np.array_equal(self.rows, np.arange(self.parent.n_rows)))

    def row_entries(self, i):
        return self.parent.row_entries(self.rows[i])

    def to_parent_row(self, i):
        return int(self.rows[i])

    def __repr__(self):
        return f"RowSubsetView({self.n_rows} of {self.parent.n_rows} rows)"


def as_view(B):
    "Wrap a matrix in a full view; pass views through unchanged."
    if isinstance(B, RowSubsetView):
        return B
    return B.full_view()


def entries_of(B):
    """All observed entries of a matrix or view as (local_rows, cols, bits).

    Sorted by (local row, col). For views the local row index refers to the
    position within the view.
    """
    if not isinstance(B, RowSubsetView):
        return B.rows, B.cols, B.bits
    if B.is_full:
        return B.parent.rows, B.parent.cols, B.parent.bits
    p = B.parent
    lo = p.row_ptr[B.rows]
    hi = p.row_ptr[B.rows + 1]
    counts = hi - lo
    total = int(counts.sum())
    if total == 0:
        z = np.zeros(0, dtype=np.int64)
        return z, z, np.zeros(0, dtype=np.int8)
    # Gather the per-row slices of the parent CSR arrays.
    idx = np.repeat(lo - np.concatenate(([0], np.cumsum(counts)[:-1])), counts) \
        + np.arange(total)
    local = np.repeat(np.arange(B.n_rows, dtype=np.int64), counts)
    return local, p.cols[idx], p.bits[idx]


def scaled_hamming(B, i, v):
    """Fraction of row i's observed positions where v disagrees with the row.

    Raises EmptyRow when the row has no observed entries (the distance has a
    zero denominator there).
    """
    cols, bits = B.row_entries(i)
    if len(cols) == 0:
        raise EmptyRow(f"row {i} has no observed entries")
    v = np.asarray(v)
    return float(np.count_nonzero(v[cols] != bits)) / len(cols)


def split_rows(B, u):
    """Partition a view's rows by the 0/1 vector u into (B1, B0).

    B1 keeps the rows with u_i = 1 in their original order, B0 the rest.
    """
    B = as_view(B)
    u = np.asarray(u)
    if len(u) != B.n_rows:
        raise DimensionMismatch(f"u has length {len(u)}, view has {B.n_rows} rows")
    sel = u != 0
    return (RowSubsetView(B.parent, B.rows[sel]),
            RowSubsetView(B.parent, B.rows[~sel]))


def masked_error(M, tiling):
    """Number of observed positions where the tiling's reconstruction differs.

    Because the tiles partition the rows, the reconstruction is 0/1-valued
    and this count equals the squared l2 error on the mask.
    """
    if tiling.m != M.n_rows or tiling.n != M.n_cols:
        raise DimensionMismatch(
            f"tiling is {tiling.m}x{tiling.n}, matrix is {M.n_rows}x{M.n_cols}")
    if M.nnz == 0:
        return 0
    row_tile = np.full(M.n_rows, -1, dtype=np.int64)
    for t, tile in enumerate(tiling.tiles):
        if len(tile.u) != tiling.m or len(tile.v) != tiling.n:
            raise DimensionMismatch("tile dimensions disagree with tiling")
        row_tile[tile.u != 0] = t
    t_of = row_tile[M.rows]
    pred = np.zeros(M.nnz, dtype=np.int8)
    covered = t_of >= 0
    if covered.any():
        V = np.stack([tile.v for tile in tiling.tiles]) if tiling.tiles else None
        pred[covered] = V[t_of[covered], M.cols[covered]]
    return int(np.count_nonzero(pred != M.bits))


def tile_error(B, tile):
    """Masked mismatch count of a single rank-one tile on a matrix or view."""
    local, cols, bits = entries_of(B)
    B = as_view(B)
    if len(tile.u) != B.n_rows or len(tile.v) != B.n_cols:
        raise DimensionMismatch("tile dimensions disagree with matrix")
    if len(local) == 0:
        return 0
    pred = tile.u[local] & tile.v[cols]
    return int(np.count_nonzero(pred != bits))
