"""Seeded generators for the synthetic models used in the experiments.

Two families: planted row-block tiles with bit-flip noise and subsampling,
and symmetric block-diagonal matrices whose tile sizes shrink geometrically.
Generation order (tile columns, then flips, then mask) is fixed so a spec
plus seed always reproduces the same instance.
"""

from dataclasses import dataclass, field

import numpy as np

from .binmat import ObservedBinaryMatrix, Tile
from .errors import DimensionMismatch, SpecInvalid
from .tiling import Tiling


@dataclass
class PlantedSpec:
    m: int
    n: int
    k_tiles: int = 1
    tau: float = 0.7
    eps: float = 0.0
    rho: float = 1.0
    seed: object = 0

    def validate(self):
        if self.m < 1 or self.n < 1:
            raise SpecInvalid("matrix must have at least one row and column")
        if not (0.0 < self.tau <= 1.0):
            raise SpecInvalid(f"tau must be in (0, 1], got {self.tau}")
        if not (0.0 <= self.eps < 0.5):
            raise SpecInvalid(f"eps must be in [0, 0.5), got {self.eps}")
        if not (0.0 < self.rho <= 1.0):
            raise SpecInvalid(f"rho must be in (0, 1], got {self.rho}")
        if not (1 <= self.k_tiles <= self.m):
            raise SpecInvalid(f"{self.k_tiles} row blocks do not fit in {self.m} rows")


@dataclass
class BlockDiagSpec:
    m: int
    k: int
    a: float
    rho: float = 1.0
    seed: object = 0

    def validate(self):
        if self.m < 1 or self.k < 1:
            raise SpecInvalid("need at least one row and one tile")
        if not (0.0 < self.a <= 1.0):
            raise SpecInvalid(f"a must be in (0, 1], got {self.a}")
        if not (0.0 < self.rho <= 1.0):
            raise SpecInvalid(f"rho must be in (0, 1], got {self.rho}")


@dataclass
class GroundTruth:
    """Full matrix, observation mask, and the planted tile supports."""

    full: np.ndarray
    mask: np.ndarray
    tiles: list  # (row indices, col indices) per planted tile

    def true_tiling(self):
        m, n = self.full.shape
        tiles = []
        for rows, cols in self.tiles:
            u = np.zeros(m, dtype=np.uint8)
            v = np.zeros(n, dtype=np.uint8)
            u[rows] = 1
            v[cols] = 1
            tiles.append(Tile(u, v))
        return Tiling(m, n, tiles)


def _round_half_up(x):
    return np.floor(np.asarray(x, dtype=np.float64) + 0.5).astype(np.int64)


def block_sizes(m, k, a):
    """Geometric tile sizes: fractions tau_1 a^l normalized to sum 1, rounded,
    with the rounding remainder folded into the first tile."""
    if a == 1.0:
        taus = np.full(k, 1.0 / k)
    else:
        tau1 = (1.0 - a) / (1.0 - a ** k)
        taus = tau1 * a ** np.arange(k)
    sizes = _round_half_up(m * taus)
    sizes[0] += m - sizes.sum()
    if (sizes < 1).any():
        raise SpecInvalid(f"tile sizes {sizes.tolist()} include an empty tile "
                          f"(m={m}, k={k}, a={a})")
    return sizes


def gen_planted(spec):
    """Planted row-block tiles, bit flips, then an independent mask.

    Rows split into k contiguous blocks of equal size (remainder on the
    last); each block gets one random column subset of round(tau n) columns
    shared by all its rows. Exactly round(eps m n) cells are then flipped,
    and each cell is kept observed with probability rho.
    """
    spec.validate()
    rng = np.random.default_rng(spec.seed)
    m, n = spec.m, spec.n
    sizes = np.full(spec.k_tiles, m // spec.k_tiles, dtype=np.int64)
    sizes[-1] += m - sizes.sum()
    A = np.zeros((m, n), dtype=np.uint8)
    tiles = []
    r0 = 0
    width = int(_round_half_up(spec.tau * n))
    for s in sizes:
        cols = np.sort(rng.choice(n, size=width, replace=False))
        rows = np.arange(r0, r0 + s)
        A[r0:r0 + s][:, cols] = 1
        tiles.append((rows, cols))
        r0 += s
    n_flip = int(_round_half_up(spec.eps * m * n))
    if n_flip:
        flip = rng.choice(m * n, size=n_flip, replace=False)
        A.flat[flip] ^= 1
    mask = rng.random((m, n)) < spec.rho
    M = ObservedBinaryMatrix.from_dense(A, mask)
    return M, GroundTruth(full=A, mask=mask, tiles=tiles)


def gen_block_diagonal(spec):
    """Symmetric block-diagonal matrix with geometrically decreasing tiles."""
    spec.validate()
    sizes = block_sizes(spec.m, spec.k, spec.a)
    rng = np.random.default_rng(spec.seed)
    m = spec.m
    A = np.zeros((m, m), dtype=np.uint8)
    tiles = []
    r0 = 0
    for s in sizes:
        idx = np.arange(r0, r0 + s)
        A[r0:r0 + s, r0:r0 + s] = 1
        tiles.append((idx, idx))
        r0 += int(s)
    mask = rng.random((m, m)) < spec.rho
    M = ObservedBinaryMatrix.from_dense(A, mask)
    return M, GroundTruth(full=A, mask=mask, tiles=tiles)


def recovery_score(tiling, gt):
    """(exact, cell accuracy) of a tiling's reconstruction against the full
    ground-truth matrix, over all cells (not just observed ones)."""
    m, n = gt.full.shape
    if tiling.m != m or tiling.n != n:
        raise DimensionMismatch(f"tiling {tiling.m}x{tiling.n} vs truth {m}x{n}")
    pred = tiling.predict_matrix()
    agree = pred == gt.full
    return bool(agree.all()), float(agree.mean())
