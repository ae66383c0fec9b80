"""Exact solvers for the rank-one problem, used as ground truth.

`exact_rank1` enumerates every assignment of the shorter side with the
closed-form best response for the other side; it is the desk-scale oracle
and refuses instances beyond its cap. `exact_rank1_ip` solves the same
problem as an integer program (HiGHS branch and bound) and handles the
hundred-row instances the ratio experiments need. Both return certified
optima; the enumeration path is itself cross-checked against full
2^(m+n) enumeration in the tests.
"""

import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.optimize import Bounds, LinearConstraint, milp

from .binmat import Tile, as_view, entries_of, tile_error
from .errors import NumericalFailure, TooLarge

ENUM_CAP = 20
_CHUNK = 2048


@dataclass
class OracleResult:
    tile: Tile
    error: int
    objective: int


def _signed_dense(B):
    "Dense +1/-1/0 matrix: sign of observed bits, 0 where unobserved."
    B = as_view(B)
    local, cols, bits = entries_of(B)
    W = np.zeros((B.n_rows, B.n_cols), dtype=np.int32)
    W[local, cols] = 2 * bits.astype(np.int32) - 1
    return W


def _enumerate_best(W):
    """Best selection over all 2^k subsets of W's columns.

    Returns (objective, v) with v the lexicographically smallest optimal
    pattern; the row side is the closed-form response u_i = [ (Wv)_i > 0 ].
    """
    m, k = W.shape
    if k == 0:
        return 0, np.zeros(0, dtype=np.uint8)
    best_obj = -1
    best_v = None
    shifts = k - 1 - np.arange(k)
    total = 1 << k
    for start in range(0, total, _CHUNK):
        ints = np.arange(start, min(start + _CHUNK, total), dtype=np.uint64)
        V = ((ints[None, :] >> shifts[:, None].astype(np.uint64)) & 1).astype(np.int32)
        R = W @ V
        obj = np.maximum(R, 0).sum(axis=0)
        j = int(np.argmax(obj))
        if obj[j] > best_obj:
            best_obj = int(obj[j])
            best_v = V[:, j].astype(np.uint8)
    return best_obj, best_v


def exact_rank1(B, cap=ENUM_CAP):
    """Globally optimal tile by exhaustive enumeration of the shorter side.

    Raises TooLarge when min(m, n) exceeds `cap` (default 20). Ties go to
    the lexicographically smallest enumerated pattern; the responding side
    is then determined (strict majority, ties excluded).
    """
    B = as_view(B)
    m, n = B.n_rows, B.n_cols
    if min(m, n) > cap:
        raise TooLarge(f"min(m, n) = {min(m, n)} exceeds enumeration cap {cap}")
    W = _signed_dense(B)
    n_ones = int((W > 0).sum())
    if n <= m:
        obj, v = _enumerate_best(W)
        u = (W @ v.astype(np.int32) > 0).astype(np.uint8)
    else:
        obj, u = _enumerate_best(W.T)
        v = (u.astype(np.int32) @ W > 0).astype(np.uint8)
    return OracleResult(tile=Tile(u, v), error=n_ones - obj, objective=obj)


def exact_rank1_ip(B):
    """Globally optimal tile via an integer program (HiGHS).

    Observed ones get z <= u_i, z <= v_j pairs pushed up by the objective;
    observed zeros get u_i + v_j - z <= 1 pushed down. Only u and v are
    integer variables; the z values are integral automatically.
    """
    B = as_view(B)
    local, cols, bits = entries_of(B)
    m, n = B.n_rows, B.n_cols
    ones = bits == 1
    i1, j1 = local[ones], cols[ones]
    i0, j0 = local[~ones], cols[~ones]
    q1, q0 = len(i1), len(i0)
    n_ones = q1
    if q1 == 0:
        return OracleResult(tile=Tile(np.zeros(m, np.uint8), np.zeros(n, np.uint8)),
                            error=0, objective=0)
    nv = m + n + q1 + q0
    c = np.zeros(nv)
    c[m + n:m + n + q1] = -1.0          # HiGHS minimizes
    c[m + n + q1:] = 1.0
    z1 = m + n + np.arange(q1)
    z0 = m + n + q1 + np.arange(q0)
    rows = np.concatenate([
        np.arange(q1), np.arange(q1),
        q1 + np.arange(q1), q1 + np.arange(q1),
        2 * q1 + np.repeat(np.arange(q0), 3),
    ])
    colidx = np.concatenate([z1, i1, z1, m + j1,
                             np.stack([i0, m + j0, z0], axis=1).ravel()
                             if q0 else np.zeros(0, dtype=np.int64)])
    vals = np.concatenate([np.ones(q1), -np.ones(q1),
                           np.ones(q1), -np.ones(q1),
                           np.tile([1.0, 1.0, -1.0], q0)])
    A = sp.csc_matrix((vals, (rows, colidx)), shape=(2 * q1 + q0, nv))
    rhs = np.concatenate([np.zeros(2 * q1), np.ones(q0)])
    integrality = np.zeros(nv)
    integrality[:m + n] = 1
    res = milp(c=c, constraints=LinearConstraint(A, -np.inf, rhs),
               integrality=integrality, bounds=Bounds(np.zeros(nv), np.ones(nv)),
               options={"mip_rel_gap": 0.0})
    if not res.success:
        raise NumericalFailure(f"integer program failed: {res.message}")
    u = (res.x[:m] > 0.5).astype(np.uint8)
    v = (res.x[m:m + n] > 0.5).astype(np.uint8)
    tile = Tile(u, v)
    err = tile_error(B, tile)
    obj = n_ones - err
    if abs(obj - (-res.fun)) > 1e-6:
        raise NumericalFailure("integer-program objective inconsistent with tile")
    return OracleResult(tile=tile, error=err, objective=obj)


def best_rank1(B, cap=ENUM_CAP):
    "Dispatch: enumeration under the cap, integer program above it."
    B = as_view(B)
    if min(B.n_rows, B.n_cols) <= cap:
        return exact_rank1(B, cap)
    return exact_rank1_ip(B)


def ratio_value(method_error, oracle_error):
    """R = method error / optimal error; 1 when both are zero, inf when only
    the oracle's is."""
    if oracle_error == 0:
        return 1.0 if method_error == 0 else math.inf
    return method_error / oracle_error


def approx_ratio(B, tile, cap=ENUM_CAP):
    """Ratio of a tile's masked error to the enumeration oracle's optimum."""
    res = exact_rank1(B, cap)
    return ratio_value(tile_error(B, tile), res.error)
