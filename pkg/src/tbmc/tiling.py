"""Recursive row-partition driver: turns any rank-one backend into a tiling.

The work set is a LIFO stack. Each popped submatrix gets a rank-one tile
from the configured backend (optionally refined by alternating
minimization); its rows split into the covered part B1 and the rest B0. B0
is pushed first, then B1 is either accepted as a tile (all its rows within
the Hamming tolerance of v, or u covered every row) or pushed back, so the
covered branch is explored depth first. A backend returning u = 0 certifies
its branch is not worth tiling and the branch ends.
"""

from dataclasses import dataclass, field

import numpy as np

from . import heuristics, lp_rank1
from .altmin import refine
from .binmat import Tile, as_view, entries_of, masked_error, split_rows
from .errors import ConfigInvalid, IndexOutOfRange

RANK1_METHODS = ("lp", "average", "partition")


@dataclass
class TbmcConfig:
    tolerance: float = 0.05
    k_max: int | None = None
    rank1_method: str = "lp"
    use_am: bool = False
    am_max_iter: int = 20
    rng_seed: int = 0

    def resolved(self, m):
        "Validate and fill in the k_max default of min(m, 256)."
        if not (0.0 < self.tolerance < 1.0):
            raise ConfigInvalid(f"tolerance must be in (0, 1), got {self.tolerance}")
        if self.rank1_method not in RANK1_METHODS:
            raise ConfigInvalid(f"unknown rank-one method {self.rank1_method!r}")
        k_max = self.k_max if self.k_max is not None else min(max(m, 1), 256)
        if k_max < 1:
            raise ConfigInvalid("k_max must be at least 1")
        if self.am_max_iter < 1:
            raise ConfigInvalid("am_max_iter must be at least 1")
        return TbmcConfig(self.tolerance, k_max, self.rank1_method,
                          self.use_am, self.am_max_iter, self.rng_seed)


@dataclass
class Tiling:
    """Ordered tiles with pairwise-disjoint row supports over an m x n grid."""

    m: int
    n: int
    tiles: list

    def __post_init__(self):
        cover = np.zeros(self.m, dtype=np.int64)
        for t in self.tiles:
            if len(t.u) != self.m or len(t.v) != self.n:
                raise ConfigInvalid("tile shape disagrees with tiling shape")
            cover += t.u
        if (cover > 1).any():
            raise ConfigInvalid("tiles must have disjoint row supports")

    @property
    def k(self):
        return len(self.tiles)

    def row_tile(self):
        "Per-row index of the covering tile, -1 for uncovered rows."
        owner = np.full(self.m, -1, dtype=np.int64)
        for t, tile in enumerate(self.tiles):
            owner[tile.u != 0] = t
        return owner

    def factors(self):
        "U (m x k) and V (n x k) binary factor matrices."
        if not self.tiles:
            return (np.zeros((self.m, 0), dtype=np.uint8),
                    np.zeros((self.n, 0), dtype=np.uint8))
        U = np.stack([t.u for t in self.tiles], axis=1)
        V = np.stack([t.v for t in self.tiles], axis=1)
        return U, V

    def predict(self, i, j):
        "Reconstructed bit at (i, j): 1 iff the row's tile selects column j."
        if not (0 <= i < self.m and 0 <= j < self.n):
            raise IndexOutOfRange(f"({i}, {j}) outside {self.m} x {self.n}")
        for t in self.tiles:
            if t.u[i] and t.v[j]:
                return 1
        return 0

    def predict_matrix(self):
        "Dense reconstruction U V^T (0/1-valued)."
        pred = np.zeros((self.m, self.n), dtype=np.uint8)
        for t in self.tiles:
            pred[t.u != 0] = t.v
        return pred


@dataclass
class TilingReport:
    tiles_found: int
    train_error: int
    reasons: list
    iterations: int
    max_stack: int
    branches_terminated: int
    uncovered_rows: np.ndarray
    k_max_hit: bool
    backend_pivots: int = 0


def _within_tolerance(B1, v, t):
    "True when every observed row of B1 is within scaled Hamming t of v."
    local, cols, bits = entries_of(B1)
    if len(local) == 0:
        return True
    mism = np.bincount(local[v[cols] != bits], minlength=B1.n_rows)
    tot = np.bincount(local, minlength=B1.n_rows)
    frac = np.where(tot > 0, mism / np.maximum(tot, 1), 0.0)
    return bool((frac < t).all())


def tbmc(M, cfg=None):
    """Run the partition loop on a matrix and return (Tiling, TilingReport)."""
    if hasattr(M, "parent"):
        raise ConfigInvalid("tbmc expects a matrix, not a row-subset view")
    cfg = (cfg or TbmcConfig()).resolved(M.n_rows)
    root = as_view(M)
    m, n = M.n_rows, M.n_cols
    stack = [root] if m > 0 else []
    tiles = []
    reasons = []
    iterations = 0
    max_stack = len(stack)
    terminated = 0
    pivots = 0
    calls = 0
    budget = 2 * m + cfg.k_max + 2

    while stack and len(tiles) < cfg.k_max:
        iterations += 1
        if iterations > budget:
            raise RuntimeError("partition loop exceeded its iteration bound")
        B = stack.pop()
        if cfg.rank1_method == "lp":
            sol = lp_rank1.lp_rank1(B)
            tile = sol.tile
            pivots += sol.iterations
        elif cfg.rank1_method == "average":
            tile = heuristics.average_rank1(B)
        else:
            rng = np.random.default_rng(np.random.SeedSequence([cfg.rng_seed, calls]))
            tile = heuristics.partition_rank1(B, rng)
        calls += 1
        if cfg.use_am and tile.u.any():
            tile = refine(B, tile, cfg.am_max_iter).tile
        if not tile.u.any():
            terminated += 1
            continue
        B1, B0 = split_rows(B, tile.u)
        if B0.n_rows:
            stack.append(B0)
        if _within_tolerance(B1, tile.v, cfg.tolerance):
            reason = "tolerance-met"
        elif B.n_rows == 1:
            reason = "leaf"
        elif tile.u.all():
            reason = "u-all-ones"
        else:
            stack.append(B1)
            max_stack = max(max_stack, len(stack))
            continue
        u_root = np.zeros(m, dtype=np.uint8)
        u_root[B1.rows] = 1
        tiles.append(Tile(u_root, tile.v))
        reasons.append(reason)
        max_stack = max(max_stack, len(stack))

    tiling = Tiling(m, n, tiles)
    covered = np.zeros(m, dtype=bool)
    for t in tiles:
        covered |= t.u != 0
    report = TilingReport(
        tiles_found=len(tiles),
        train_error=masked_error(M, tiling),
        reasons=reasons,
        iterations=iterations,
        max_stack=max_stack,
        branches_terminated=terminated,
        uncovered_rows=np.flatnonzero(~covered),
        k_max_hit=bool(stack) and len(tiles) >= cfg.k_max,
        backend_pivots=pivots,
    )
    return tiling, report
