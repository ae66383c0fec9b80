"""Rank-one binary approximation of a partially observed matrix via an LP.

The relaxation keeps one variable per row (u_i), one per column (v_j), and
one auxiliary z_ij per observed zero. Observed ones contribute
(u_i + v_j) / 2 to the objective; each observed zero charges z_ij, which the
constraint u_i + v_j - z_ij <= 1 forces up to 1 exactly when both endpoints
are selected. The constraint matrix is totally unimodular, so the optimum
is integral and rounds losslessly to a tile.

Two solver accelerations, both exact:

* Rows (and columns) with identical observed patterns are interchangeable,
  so they collapse to one weighted class each; the merged LP has the same
  unimodular shape and its optimum lifts class-constant to the full LP.
  Fully observed block-structured inputs shrink to a few variables.
* The simplex starts from a crash vertex chosen among deterministic
  candidates that include the exact binary optimum of the relaxation,
  computed via its min-cut form. The crash basis puts z degenerately on a
  rationed spread of boundary cells, which pins the duals that price out
  unselected rows and columns, so on well-posed instances the simplex only
  confirms optimality.
"""

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import breadth_first_order, maximum_flow

from . import simplex
from .binmat import Tile, as_view, entries_of
from .errors import NumericalFailure

INTEGRALITY_TOL = 1e-9


@dataclass
class LpProblem:
    """Variable table and objective of the rank-one LP for one (sub)matrix.

    Variables are ordered u_0..u_{m-1}, v_0..v_{n-1}, then one z per observed
    zero in (row, col) order; that ordering is what Bland's rule sees.
    `zero_weight` is all-ones for a problem built from a matrix; the merged
    problems used internally carry class multiplicities there, with
    row_ones/col_ones holding the summed per-class counts.
    """

    m: int
    n: int
    one_rows: np.ndarray
    one_cols: np.ndarray
    zero_rows: np.ndarray
    zero_cols: np.ndarray
    row_ones: np.ndarray
    col_ones: np.ndarray
    c: np.ndarray
    n_ones: int
    zero_weight: np.ndarray = None

    def __post_init__(self):
        if self.zero_weight is None:
            self.zero_weight = np.ones(len(self.zero_rows), dtype=np.int64)

    @property
    def n_cons(self):
        return len(self.zero_rows)

    @property
    def n_vars(self):
        return self.m + self.n + self.n_cons

    def constraint_matrix(self):
        "u_i + v_j - z_ij <= 1 rows as a sparse matrix over the variable table."
        q = self.n_cons
        rows = np.tile(np.arange(q), 3)
        cols = np.concatenate([self.zero_rows, self.m + self.zero_cols,
                               self.m + self.n + np.arange(q)])
        vals = np.concatenate([np.ones(2 * q), -np.ones(q)])
        return sp.csc_matrix((vals, (rows, cols)), shape=(q, self.n_vars))

    def relaxed_objective(self, u, v):
        "Objective value of (u, v) with every z at its forced minimum."
        lin = 0.5 * (self.row_ones @ u.astype(np.float64)
                     + self.col_ones @ v.astype(np.float64))
        if self.n_cons:
            forced = (u[self.zero_rows].astype(np.float64)
                      + v[self.zero_cols] - 1.0)
            lin -= self.zero_weight @ np.maximum(forced, 0.0)
        return float(lin)


@dataclass
class Rank1Solution:
    """Tile extracted from the LP optimum plus solver diagnostics."""

    tile: Tile
    objective: float
    raw_values: np.ndarray
    max_integrality_gap: float
    iterations: int
    bound_flips: int = 0


def build_lp(B):
    """Assemble the LP for a matrix or row-subset view."""
    B = as_view(B)
    local, cols, bits = entries_of(B)
    m, n = B.n_rows, B.n_cols
    ones = bits == 1
    one_rows = local[ones]
    one_cols = cols[ones]
    zero_rows = local[~ones]
    zero_cols = cols[~ones]
    row_ones = np.bincount(one_rows, minlength=m).astype(np.int64)
    col_ones = np.bincount(one_cols, minlength=n).astype(np.int64)
    q = len(zero_rows)
    c = np.concatenate([0.5 * row_ones, 0.5 * col_ones, -np.ones(q)])
    return LpProblem(m=m, n=n, one_rows=one_rows, one_cols=one_cols,
                     zero_rows=zero_rows, zero_cols=zero_cols,
                     row_ones=row_ones, col_ones=col_ones, c=c,
                     n_ones=int(ones.sum()))


def _flow_points(P):
    """The relaxation's binary optima via its min-cut form.

    Selecting row i earns row_ones_i / 2, selecting column j earns
    col_ones_j / 2, and each observed zero inside the selected rectangle
    costs its weight: exactly an s-t cut on a bipartite graph, with rows on
    the source side selected and columns on the sink side selected.
    Capacities are doubled to stay integral. Returns the two canonical
    optimal cuts (source-reachable and sink-coreachable).
    """
    m, n, q = P.m, P.n, P.n_cons
    S, T = 0, m + n + 1
    src = np.concatenate([np.full(m, S), 1 + P.zero_rows, 1 + m + np.arange(n)])
    dst = np.concatenate([1 + np.arange(m, dtype=np.int64), 1 + m + P.zero_cols,
                          np.full(n, T)])
    cap = np.concatenate([P.row_ones, 2 * P.zero_weight, P.col_ones])
    keep = cap > 0
    graph = sp.csr_matrix((cap[keep].astype(np.int32), (src[keep], dst[keep])),
                          shape=(m + n + 2, m + n + 2))
    res = maximum_flow(graph, S, T)
    residual = graph - res.flow
    residual.data = np.maximum(residual.data, 0)
    residual.eliminate_zeros()
    points = []
    reach = breadth_first_order(residual, S, directed=True,
                                return_predecessors=False)
    side = np.zeros(m + n + 2, dtype=bool)
    side[reach] = True
    points.append((side[1:1 + m].astype(np.uint8),
                   (~side[1 + m:1 + m + n]).astype(np.uint8)))
    coreach = breadth_first_order(residual.T, T, directed=True,
                                  return_predecessors=False)
    tside = np.zeros(m + n + 2, dtype=bool)
    tside[coreach] = True
    points.append(((~tside[1:1 + m]).astype(np.uint8),
                   tside[1 + m:1 + m + n].astype(np.uint8)))
    return points


def _crash_point(P):
    """Best binary (u, v) under the relaxed objective among cheap candidates.

    Candidates: alternating best-response sweeps seeded from the column with
    the most observed ones and from the full row set, then the min-cut
    optima (plus a best-response pass over each), then the trivial points.
    Tile-like candidates come first so value ties resolve to a genuine tile
    rather than a degenerate vertex; every choice is index-deterministic.
    """
    m, n = P.m, P.n
    w = P.zero_weight.astype(np.float64)

    def br_v(u):
        if P.n_cons:
            sel = u[P.zero_rows] == 1
            load = np.bincount(P.zero_cols[sel], weights=w[sel], minlength=n)
        else:
            load = np.zeros(n)
        return (0.5 * P.col_ones > load).astype(np.uint8)

    def br_u(v):
        if P.n_cons:
            sel = v[P.zero_cols] == 1
            load = np.bincount(P.zero_rows[sel], weights=w[sel], minlength=m)
        else:
            load = np.zeros(m)
        return (0.5 * P.row_ones > load).astype(np.uint8)

    cands = []
    if P.col_ones.max(initial=0) > 0:
        jstar = int(np.argmax(P.col_ones))
        u = np.zeros(m, dtype=np.uint8)
        u[P.one_rows[P.one_cols == jstar]] = 1
        for _ in range(4):
            v = br_v(u)
            cands.append((u, v))
            u2 = br_u(v)
            if np.array_equal(u2, u):
                break
            u = u2

    u = np.ones(m, dtype=np.uint8)
    for _ in range(4):
        v = br_v(u)
        cands.append((u, v))
        u2 = br_u(v)
        if np.array_equal(u2, u):
            break
        u = u2

    if P.n_cons:
        for uf, vf in _flow_points(P):
            cands.append((uf, br_v(uf)))
            cands.append((uf, vf))

    cands.append((np.zeros(m, dtype=np.uint8), np.zeros(n, dtype=np.uint8)))
    cands.append((np.ones(m, dtype=np.uint8), np.zeros(n, dtype=np.uint8)))

    best = None
    best_val = -np.inf
    for u, v in cands:
        val = P.relaxed_objective(u, v)
        if val > best_val + 1e-9:
            best_val = val
            best = (u, v)
    return best


def _distribute_claims(eligible, owners, weights, need, capacity, other):
    """Greedy weighted claim assignment for the crash basis.

    Cells in `eligible` are grouped contiguously by `owners`; each owner
    keeps claiming cells (round-robin across the group, skipping cells whose
    counterpart `other` lacks remaining `capacity`) until its accumulated
    weight reaches `need`. Followed deterministically; shortfalls are left
    for the simplex to repair.
    """
    claimed = []
    if len(eligible) == 0:
        return claimed
    starts = np.flatnonzero(np.diff(owners, prepend=-1))
    ends = np.append(starts[1:], len(owners))
    turn = 0
    for s, e in zip(starts, ends):
        want = need[owners[s]]
        width = e - s
        taken = 0.0
        for step in range(width):
            if taken >= want - 1e-9:
                break
            t = s + (turn + step) % width
            wt = weights[t]
            if capacity[other[t]] >= wt - 1e-9:
                capacity[other[t]] -= wt
                claimed.append(eligible[t])
                taken += wt
        turn += 1
    return claimed


def _crash_init(P, u, v):
    """Feasible starting basis at the binary point (u, v).

    z sits in the basis at value 1 on zeros inside the selected rectangle
    (where the constraint forces it up) and at value 0 on a spread of
    boundary cells. Each boundary z pins its row's dual at the cell weight,
    which is what prices out an unselected row or column with observed ones;
    claims are rationed so no selected row or column accumulates more dual
    weight than its own objective coefficient. The basis stays diagonal, and
    at a best-response fixed point on a recoverable instance it is already
    optimal, so the simplex only confirms.
    """
    q = P.n_cons
    nv = P.n_vars
    m, n = P.m, P.n
    uf = u.astype(np.float64)
    vf = v.astype(np.float64)
    z = np.maximum(uf[P.zero_rows] + vf[P.zero_cols] - 1.0, 0.0)
    x0 = np.concatenate([uf, vf, z])
    st = np.where(x0 >= 0.5, simplex.AT_UB, simplex.AT_LB).astype(np.int8)
    basis = nv + np.arange(q, dtype=np.int64)          # slack by default
    if q == 0:
        return st, basis, x0
    w = P.zero_weight.astype(np.float64)
    zu = u[P.zero_rows]
    zv = v[P.zero_cols]
    both = (zu == 1) & (zv == 1)
    basis[both] = m + n + np.flatnonzero(both)         # z basic at 1

    charge_row = np.bincount(P.zero_rows[both], weights=w[both], minlength=m)
    charge_col = np.bincount(P.zero_cols[both], weights=w[both], minlength=n)
    cap_row = np.where(u == 1, 0.5 * P.row_ones - charge_row, 0.0)
    cap_col = np.where(v == 1, 0.5 * P.col_ones - charge_col, 0.0)
    need_u = np.where((u == 0) & (P.row_ones > 0), 0.5 * P.row_ones, 0.0)
    need_v = np.where((v == 0) & (P.col_ones > 0), 0.5 * P.col_ones, 0.0)

    # Out-rows claim boundary cells under selected columns; (row, col) order
    # keeps each row's cells contiguous.
    row_elig = np.flatnonzero((zu == 0) & (zv == 1) & (need_u[P.zero_rows] > 0))
    for k in _distribute_claims(row_elig, P.zero_rows[row_elig], w[row_elig],
                                need_u, cap_col, P.zero_cols[row_elig]):
        basis[k] = m + n + k
    # Out-columns claim boundary cells on selected rows, grouped by column.
    col_elig = np.flatnonzero((zv == 0) & (zu == 1) & (need_v[P.zero_cols] > 0))
    if len(col_elig):
        order = np.lexsort((P.zero_rows[col_elig], P.zero_cols[col_elig]))
        col_elig = col_elig[order]
    for k in _distribute_claims(col_elig, P.zero_cols[col_elig], w[col_elig],
                                need_v, cap_row, P.zero_rows[col_elig]):
        basis[k] = m + n + k
    return st, basis, x0


def _group_patterns(pos_a, key_a, pos_b, key_b, size):
    """Class id per index in [0, size): indices with identical (key_a set,
    key_b set) share a class. Ids follow first occurrence."""
    ptr_a = np.searchsorted(pos_a, np.arange(size + 1))
    ptr_b = np.searchsorted(pos_b, np.arange(size + 1))
    ids = np.empty(size, dtype=np.int64)
    seen = {}
    for i in range(size):
        key = (key_a[ptr_a[i]:ptr_a[i + 1]].tobytes(),
               key_b[ptr_b[i]:ptr_b[i + 1]].tobytes())
        ids[i] = seen.setdefault(key, len(seen))
    return ids, len(seen)


def _merged_problem(P):
    """Collapse identical rows/columns into weighted classes, or None.

    Two rows merge when they have the same observed ones and zeros in the
    same columns (symmetrically for columns). The merged LP keeps one
    constraint per class pair with the pair's cell count as the z weight.
    """
    m, n = P.m, P.n
    row_cls, R = _group_patterns(P.one_rows, P.one_cols,
                                 P.zero_rows, P.zero_cols, m)
    o1 = np.lexsort((P.one_rows, P.one_cols))
    o0 = np.lexsort((P.zero_rows, P.zero_cols))
    col_cls, C = _group_patterns(P.one_cols[o1], P.one_rows[o1],
                                 P.zero_cols[o0], P.zero_rows[o0], n)
    if R == m and C == n:
        return None
    row_gain = np.bincount(row_cls, weights=P.row_ones, minlength=R).astype(np.int64)
    col_gain = np.bincount(col_cls, weights=P.col_ones, minlength=C).astype(np.int64)
    zpair = row_cls[P.zero_rows] * C + col_cls[P.zero_cols]
    zuniq, zw = np.unique(zpair, return_counts=True)
    zr = zuniq // C
    zc = zuniq % C
    opair = np.unique(row_cls[P.one_rows] * C + col_cls[P.one_cols])
    c = np.concatenate([0.5 * row_gain, 0.5 * col_gain, -zw.astype(np.float64)])
    merged = LpProblem(m=R, n=C, one_rows=opair // C, one_cols=opair % C,
                       zero_rows=zr, zero_cols=zc,
                       row_ones=row_gain, col_ones=col_gain, c=c,
                       n_ones=P.n_ones, zero_weight=zw.astype(np.int64))
    return merged, row_cls, col_cls


def _run_engine(P, crash, max_pivots, rule):
    "Simplex pass over an LpProblem; returns (struct values, pivots, flips)."
    A = P.constraint_matrix()
    b = np.ones(P.n_cons)
    ub = np.ones(P.n_vars)
    init = _crash_init(P, *_crash_point(P)) if crash else None
    res = simplex.solve_bounded_lp(A, b, P.c, ub, init=init,
                                   max_pivots=max_pivots, rule=rule)
    return res.x, res.pivots, res.bound_flips


def _finish(P, raw, pivots, flips, expected_obj):
    """Common cleanup: zero preference, minimal z, integrality, rounding."""
    m, n, q = P.m, P.n, P.n_cons
    free = np.zeros(P.n_vars, dtype=bool)
    free[:m + n] = P.c[:m + n] == 0
    raw[free] = 0.0
    if q:
        raw[m + n:] = np.maximum(raw[P.zero_rows] + raw[m + P.zero_cols] - 1.0,
                                 0.0)
    objective = float(P.c @ raw)
    if abs(objective - expected_obj) > 1e-6:
        raise NumericalFailure(
            f"optimum inconsistent after cleanup ({objective} vs {expected_obj})")
    gap = float(np.abs(raw - np.rint(raw)).max(initial=0.0))
    if gap > INTEGRALITY_TOL:
        raise NumericalFailure(f"fractional optimum (gap {gap:.3e})")
    bits = raw > 0.5
    tile = Tile(bits[:m].astype(np.uint8), bits[m:m + n].astype(np.uint8))
    return Rank1Solution(tile=tile, objective=objective, raw_values=raw,
                         max_integrality_gap=gap, iterations=pivots,
                         bound_flips=flips)


def solve_simplex(P, *, crash=True, max_pivots=None):
    """Solve the LP to a basic optimal solution and extract the tile.

    Raises NumericalFailure if any optimal variable ends up further than
    1e-9 from a bit, if the pivot cap is exceeded, or if the cleaned-up
    solution disagrees with the solver's objective; never silently rounds a
    fractional optimum.
    """
    m, n, q = P.m, P.n, P.n_cons
    if max_pivots is None:
        max_pivots = max(1000, 10 * (P.n_vars + P.n_cons))
    if q == 0:
        raw = (P.c > 0).astype(np.float64)
        return _finish(P, raw, 0, 0, float(P.c @ raw))
    if crash:
        merged = _merged_problem(P)
        if merged is not None:
            Pm, row_cls, col_cls = merged
            cap_m = max(1000, 10 * (Pm.n_vars + Pm.n_cons))
            xm, pivots, flips = _run_engine(Pm, True, cap_m)
            expected = float(Pm.c @ xm)
            raw = np.concatenate([xm[:Pm.m][row_cls],
                                  xm[Pm.m:Pm.m + Pm.n][col_cls],
                                  np.zeros(q)])
            return _finish(P, raw, pivots, flips, expected)
    xs, pivots, flips = _run_engine(P, crash, max_pivots)
    return _finish(P, xs.copy(), pivots, flips, float(P.c @ xs))


def lp_rank1(B, *, crash=True):
    "Build and solve the rank-one LP for a matrix or view."
    return solve_simplex(build_lp(B), crash=crash)


def write_lp_text(P, stream):
    """Dump the LP in CPLEX LP text form for cross-checking with other solvers."""
    names = [f"u{i}" for i in range(P.m)] + [f"v{j}" for j in range(P.n)] \
        + [f"z_{i}_{j}" for i, j in zip(P.zero_rows, P.zero_cols)]
    stream.write("\\ rank-one tile LP\nMaximize\n obj:")
    terms = []
    for j, cj in enumerate(P.c):
        if cj != 0:
            terms.append(f" {'+' if cj > 0 else '-'} {abs(cj):g} {names[j]}")
    stream.write("".join(terms) if terms else " 0 u0")
    stream.write("\nSubject To\n")
    for k in range(P.n_cons):
        i, j = P.zero_rows[k], P.zero_cols[k]
        stream.write(f" c{k}: u{i} + v{j} - z_{i}_{j} <= 1\n")
    stream.write("Bounds\n")
    for name in names:
        stream.write(f" 0 <= {name} <= 1\n")
    stream.write("End\n")
