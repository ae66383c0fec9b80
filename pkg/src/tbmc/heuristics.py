"""Cheap rank-one baselines with the same call shape as the LP solver.

`average_rank1` keeps the columns that are majority-one among their observed
entries; `partition_rank1` grows a tile from one random positive column.
Both degrade gracefully under missing data: every fraction is taken over
observed entries only.
"""

import numpy as np

from .binmat import Tile, as_view, entries_of


def average_rank1(B):
    """Majority-vote tile.

    v_j = 1 iff strictly more than half of column j's observed entries are 1
    (columns with nothing observed stay out); u_i = 1 iff row i has an
    observed 1 in some selected column.
    """
    B = as_view(B)
    local, cols, bits = entries_of(B)
    m, n = B.n_rows, B.n_cols
    total = np.bincount(cols, minlength=n)
    pos = np.bincount(cols[bits == 1], minlength=n)
    v = (2 * pos > total).astype(np.uint8)
    u = np.zeros(m, dtype=np.uint8)
    hit = (bits == 1) & (v[cols] == 1)
    u[local[hit]] = 1
    return Tile(u, v)


def partition_rank1(B, rng_seed=0):
    """Random-column tile.

    Picks a uniformly random column among those with at least one observed 1;
    u marks the rows observed 1 there, and v keeps the columns whose observed
    mean over those rows is at least 1/2. With no positive column anywhere the
    empty tile is returned.
    """
    B = as_view(B)
    local, cols, bits = entries_of(B)
    m, n = B.n_rows, B.n_cols
    u = np.zeros(m, dtype=np.uint8)
    v = np.zeros(n, dtype=np.uint8)
    candidates = np.unique(cols[bits == 1])
    if len(candidates) == 0:
        return Tile(u, v)
    rng = rng_seed if isinstance(rng_seed, np.random.Generator) \
        else np.random.default_rng(rng_seed)
    jstar = int(candidates[rng.integers(len(candidates))])
    u[local[(cols == jstar) & (bits == 1)]] = 1
    sel = u[local] == 1
    den = np.bincount(cols[sel], minlength=n)
    num = np.bincount(cols[sel & (bits == 1)], minlength=n)
    v[(den > 0) & (2 * num >= den)] = 1
    return Tile(u, v)
