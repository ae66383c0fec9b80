"""Bounded-variable revised simplex with Bland's least-index rule.

Maximizes c.x subject to A x <= b and 0 <= x <= ub, with A sparse. Slack
variables are appended internally, so a basis always has one variable per
constraint row. Nonbasic variables sit at a finite bound; a step limited by
the entering variable's own opposite bound is taken as a bound flip without
touching the basis.

Entering and leaving choices both use least variable index (Bland), which
rules out cycling and pins the pivot path, so repeated solves of the same
instance are bit-identical. The constraint data in this package is totally
unimodular, so every basic solution is integral and the floating-point
tableau quantities stay exact far below the tolerances.
"""

import os
import time
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from .errors import NumericalFailure

_TRACE = bool(os.environ.get("TBMC_SIMPLEX_TRACE"))

AT_LB, AT_UB, BASIC = 0, 1, 2

DUAL_TOL = 1e-9     # reduced-cost optimality tolerance
PIVOT_TOL = 1e-7    # smallest acceptable pivot magnitude
RATIO_TOL = 1e-9    # tie tolerance in the ratio test
REFACTOR_EVERY = 64


@dataclass
class SimplexResult:
    x: np.ndarray             # structural variable values
    objective: float
    pivots: int
    bound_flips: int
    status_codes: np.ndarray  # per structural variable: AT_LB/AT_UB/BASIC


def _concat_ranges(counts):
    "0..c0-1, 0..c1-1, ... as one array."
    total = int(counts.sum())
    if total == 0:
        return np.zeros(0, dtype=np.int64)
    starts = np.concatenate(([0], np.cumsum(counts)[:-1]))
    return np.arange(total) - np.repeat(starts, counts)


class _Basis:
    """Factorization of the basis matrix plus an eta file of pivot updates.

    Bases here are usually diagonal (slack or singleton z columns aligned
    with their own row), which gets a divide-only fast path; anything else
    falls back to a sparse LU.
    """

    def __init__(self, A, n_struct):
        self.A = A
        self.n_struct = n_struct
        self.M = A.shape[0]
        self._diag = None
        self._lu = None
        self._etas = []

    def column(self, j):
        "Sparse (indices, values) of variable j's constraint column."
        if j >= self.n_struct:
            return (np.array([j - self.n_struct]), np.array([1.0]))
        lo, hi = self.A.indptr[j], self.A.indptr[j + 1]
        return self.A.indices[lo:hi], self.A.data[lo:hi]

    def refactor(self, basis):
        self._etas = []
        A, M, nv = self.A, self.M, self.n_struct
        jj = np.asarray(basis)
        is_sl = jj >= nv
        js = np.where(is_sl, 0, jj)
        lo = A.indptr[js].astype(np.int64)
        cnt = np.where(is_sl, 1, A.indptr[js + 1] - lo).astype(np.int64)
        if (cnt == 1).all():
            rows_of = np.where(is_sl, jj - nv, A.indices[lo])
            if np.array_equal(rows_of, np.arange(M)):
                self._diag = np.where(is_sl, 1.0, A.data[lo])
                self._lu = None
                return
        indptr = np.zeros(M + 1, dtype=np.int64)
        np.cumsum(cnt, out=indptr[1:])
        indices = np.empty(indptr[-1], dtype=np.int64)
        data = np.empty(indptr[-1])
        sl_pos = indptr[:-1][is_sl]
        indices[sl_pos] = jj[is_sl] - nv
        data[sl_pos] = 1.0
        st = np.flatnonzero(~is_sl)
        if len(st):
            cnt_s = cnt[st]
            sub = _concat_ranges(cnt_s)
            dst = np.repeat(indptr[:-1][st], cnt_s) + sub
            src = np.repeat(lo[st], cnt_s) + sub
            indices[dst] = A.indices[src]
            data[dst] = A.data[src]
        B = sp.csc_matrix((data, indices, indptr), shape=(M, M))
        self._diag = None
        self._lu = splu(B)

    def _apply_etas(self, w):
        for r, eidx, evals, wr in self._etas:
            t = w[r] / wr
            if t != 0.0:
                w[eidx] -= evals * t
                w[r] = t
        return w

    def solve(self, rhs):
        "B^-1 rhs for a dense rhs."
        if self._diag is not None:
            w = rhs / self._diag
        else:
            w = self._lu.solve(rhs)
        return self._apply_etas(w)

    def ftran(self, idx, vals):
        "B^-1 a for a sparse column a."
        if self._diag is not None:
            w = np.zeros(self.M)
            w[idx] = vals / self._diag[idx]
        else:
            w = np.zeros(self.M)
            w[idx] = vals
            w = self._lu.solve(w)
        return self._apply_etas(w)

    def btran(self, v):
        "y with B^T y = v, for dense v."
        y = v.copy()
        for r, eidx, evals, wr in reversed(self._etas):
            s = evals @ y[eidx]
            y[r] = (y[r] - (s - wr * y[r])) / wr
        if self._diag is not None:
            y /= self._diag
        else:
            y = self._lu.solve(y, trans="T")
        return y

    def push_eta(self, r, w):
        nz = np.flatnonzero(w)
        self._etas.append((r, nz, w[nz].copy(), w[r]))

    @property
    def eta_count(self):
        return len(self._etas)


def solve_bounded_lp(A, b, c, ub, *, init=None, max_pivots=None,
                     rule="bland-shuffled"):
    """Run the simplex loop; returns a SimplexResult or raises NumericalFailure.

    `init`, when given, is a (status, basis, x_struct) crash start: bound
    codes per structural variable, a basis array mapping each constraint row
    to a variable index (structural or slack), and the starting structural
    values. Without it, the all-slack basis with every structural variable
    at its lower bound is used.

    `rule` selects the pivot order: "bland-shuffled" (default) applies
    Bland's rule under a fixed pseudo-random permutation of the variables,
    "bland" uses the natural variable order. Both are anti-cycling (Bland's
    argument works for any fixed total order) and deterministic; the
    shuffled order is far less prone to crawling along degenerate plateaus.
    """
    A = sp.csc_matrix(A)
    M, nv = A.shape
    nt = nv + M
    if rule == "bland":
        priority = np.arange(nt, dtype=np.float64)
    else:
        priority = np.random.default_rng(12345).permutation(nt).astype(np.float64)
    c_all = np.zeros(nt)
    c_all[:nv] = c
    ub_all = np.full(nt, np.inf)
    ub_all[:nv] = ub
    if max_pivots is None:
        max_pivots = max(1000, 10 * (nv + 2 * M))

    status = np.full(nt, AT_LB, dtype=np.int8)
    x = np.zeros(nt)
    if init is None:
        basis = np.arange(nv, nv + M, dtype=np.int64)
    else:
        st0, basis, x0 = init
        basis = np.asarray(basis, dtype=np.int64)
        status[:nv] = st0
        x[:nv] = x0
    status[basis] = BASIC

    engine = _Basis(A, nv)
    engine.refactor(basis)

    def recompute_basics():
        xs = x[:nv].copy()
        xs[status[:nv] == BASIC] = 0.0
        x[basis] = engine.solve(b - A @ xs)

    recompute_basics()
    if (x[basis] < -1e-7).any() or (x[basis] - ub_all[basis] > 1e-7).any():
        raise NumericalFailure("infeasible starting basis")

    pivots = 0
    flips = 0
    t_start = time.time()
    while True:
        if _TRACE and (pivots + flips) % 500 == 0:
            print(f"  [simplex] pivots={pivots} flips={flips} "
                  f"obj={float(c_all @ x):.1f} t={time.time() - t_start:.1f}s",
                  flush=True)
        y = engine.btran(c_all[basis])
        d = np.empty(nt)
        d[:nv] = c - A.T @ y
        d[nv:] = -y
        cand = ((status == AT_LB) & (d > DUAL_TOL)) | ((status == AT_UB) & (d < -DUAL_TOL))
        if not cand.any():
            break
        e = int(np.argmin(np.where(cand, priority, np.inf)))
        sgn = 1.0 if status[e] == AT_LB else -1.0

        idx, vals = engine.column(e)
        w = engine.ftran(idx, vals)
        alpha = sgn * w

        xB = x[basis]
        ubB = ub_all[basis]
        t_bound = ub_all[e]
        ratios = np.full(M, np.inf)
        pos = alpha > PIVOT_TOL
        neg = alpha < -PIVOT_TOL
        ratios[pos] = xB[pos] / alpha[pos]
        ratios[neg] = (ubB[neg] - xB[neg]) / (-alpha[neg])
        t_rows = ratios.min() if M else np.inf
        t = min(t_bound, t_rows)
        if not np.isfinite(t):
            raise NumericalFailure("unbounded direction in simplex")
        t = max(t, 0.0)

        if t_bound <= t_rows + RATIO_TOL:
            # Bound flip: entering variable crosses to its other bound.
            x[e] += sgn * t_bound
            x[basis] = xB - alpha * t_bound
            status[e] = AT_UB if status[e] == AT_LB else AT_LB
            flips += 1
            continue

        blocking = np.flatnonzero(ratios <= t + RATIO_TOL)
        r = int(blocking[np.argmin(priority[basis[blocking]])])
        lv = int(basis[r])
        x[e] += sgn * t
        x[basis] = xB - alpha * t
        if alpha[r] > 0:
            status[lv] = AT_LB
            x[lv] = 0.0
        else:
            status[lv] = AT_UB
            x[lv] = ub_all[lv]
        basis[r] = e
        status[e] = BASIC
        engine.push_eta(r, w)
        pivots += 1
        if pivots > max_pivots:
            raise NumericalFailure(f"pivot cap {max_pivots} exceeded")
        if engine.eta_count >= REFACTOR_EVERY:
            engine.refactor(basis)
            recompute_basics()

    xs = x[:nv].copy()
    return SimplexResult(
        x=xs,
        objective=float(c @ xs),
        pivots=pivots,
        bound_flips=flips,
        status_codes=status[:nv].copy(),
    )
