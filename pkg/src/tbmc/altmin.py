"""Alternating refinement of a rank-one tile under missing data.

Each half-step is the exact coordinate minimizer of the masked error with
the other side held fixed, so the error never increases. An update that
would empty the tile is rejected and iteration stops, since losing the tile
entirely can only hurt the enclosing partition step.
"""

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .binmat import Tile, as_view, entries_of
from .errors import DimensionMismatch


@dataclass
class WeightMatrix:
    """Signed observation matrix: +1 for observed ones, -1 for observed
    zeros, 0 where unobserved. Stored row-wise and column-wise."""

    by_row: sp.csr_matrix
    by_col: sp.csc_matrix

    @property
    def shape(self):
        return self.by_row.shape

    def row_scores(self, v):
        "W v"
        return self.by_row @ v.astype(np.float64)

    def col_scores(self, u):
        "u^T W"
        return self.by_col.T @ u.astype(np.float64)


def weight_matrix(B):
    B = as_view(B)
    local, cols, bits = entries_of(B)
    data = (2 * bits.astype(np.int8) - 1).astype(np.float64)
    W = sp.csr_matrix((data, (local, cols)), shape=(B.n_rows, B.n_cols))
    return WeightMatrix(by_row=W, by_col=W.tocsc())


@dataclass
class RefineResult:
    tile: Tile
    sweeps: int
    converged: bool  # False only when the sweep cap cut iteration short


def refine(B, start, max_iter=20, update_u_first=True):
    """Alternate u <- [Wv > 0] and v <- [u W > 0] until a fixed point.

    Strict inequality means score ties drop out of the tile. Returns the
    refined tile; its masked error never exceeds the start tile's.
    """
    B = as_view(B)
    if len(start.u) != B.n_rows or len(start.v) != B.n_cols:
        raise DimensionMismatch("start tile does not match matrix shape")
    W = weight_matrix(B)
    u = start.u.copy()
    v = start.v.copy()
    for sweep in range(1, max_iter + 1):
        changed = False
        for phase in ("u", "v") if update_u_first else ("v", "u"):
            if phase == "u":
                nxt = (W.row_scores(v) > 0).astype(np.uint8)
                if not nxt.any():
                    return RefineResult(Tile(u, v), sweep, True)
                if not np.array_equal(nxt, u):
                    u = nxt
                    changed = True
            else:
                nxt = (W.col_scores(u) > 0).astype(np.uint8)
                if not nxt.any():
                    return RefineResult(Tile(u, v), sweep, True)
                if not np.array_equal(nxt, v):
                    v = nxt
                    changed = True
        if not changed:
            return RefineResult(Tile(u, v), sweep, True)
    return RefineResult(Tile(u, v), max_iter, False)
