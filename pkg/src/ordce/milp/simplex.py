"""Dense-tableau bounded-variable primal simplex.

Two phases: phase 1 minimizes the sum of artificial variables added to rows
whose slack cannot absorb the residual of the starting point; phase 2
optimizes the real objective with the artificials pinned to zero. Nonbasic
variables sit at one of their bounds, or at zero when zero lies strictly
inside the bounds, so no bound ever becomes a row.

Pricing is Dantzig's largest reduced cost with a Harris two-pass ratio test.
After a run of degenerate pivots the solver switches to Bland's smallest-index
rule until it makes progress again.

The pivoting loop and the starting-basis crash are compiled with numba. The
tableau is row-major so a pivot only touches the rows the entering column
reaches.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit
from scipy import sparse

FEAS_TOL = 1e-7
OPT_TOL = 1e-9
PIVOT_TOL = 1e-9
DEGENERATE_RUN = 30
REFRESH_EVERY = 100

# _FREE marks a nonbasic column resting strictly between its bounds (at zero)
_BASIC, _AT_LOWER, _AT_UPPER, _FREE = 0, 1, 2, 3
_STATUS = {0: "optimal", 1: "unbounded", 2: "iteration_limit"}


@dataclass
class LpResult:
    status: str  # "optimal" | "infeasible" | "unbounded" | "iteration_limit"
    x: np.ndarray | None = None
    objective: float = float("nan")
    iterations: int = 0

    @property
    def optimal(self) -> bool:
        return self.status == "optimal"


def solve_lp(c, A, sense, b, lower, upper, max_iter: int | None = None) -> LpResult:
    """Minimize ``c @ x`` subject to ``A x (sense) b`` and ``lower <= x <= upper``.

    ``sense`` holds -1 for <=, 0 for =, +1 for >=. ``A`` may be dense or
    scipy-sparse. Fixed columns are substituted out before the tableau is built.
    """
    c = np.asarray(c, dtype=float)
    lower = np.asarray(lower, dtype=float)
    upper = np.asarray(upper, dtype=float)
    b = np.asarray(b, dtype=float)
    sense = np.asarray(sense)
    if np.any(lower > upper + FEAS_TOL):
        return LpResult("infeasible")
    upper = np.maximum(upper, lower)

    A = sparse.csr_matrix(A) if not sparse.issparse(A) else A.tocsr()
    fixed = lower == upper
    free_cols = np.flatnonzero(~fixed)
    const_obj = float(c[fixed] @ lower[fixed])
    A_dense, b_adj, row_nnz = _reduce_fixed(A.indptr, A.indices, A.data.astype(float), fixed, lower, b)

    # rows left without free columns are checked directly and dropped
    empty = row_nnz == 0
    if empty.any():
        rhs = b_adj[empty]
        sn = sense[empty]
        scale = np.maximum(1.0, np.abs(b[empty]))
        bad = ((sn == -1) & (rhs < -FEAS_TOL * scale)) | ((sn == 1) & (rhs > FEAS_TOL * scale)) | \
              ((sn == 0) & (np.abs(rhs) > FEAS_TOL * scale))
        if bad.any():
            return LpResult("infeasible")
    keep = np.flatnonzero(~empty)

    x = lower.copy()
    if free_cols.size == 0:
        return LpResult("optimal", x, const_obj, 0)
    if keep.size == 0:
        # box-constrained only: each variable goes to its cheaper bound
        cf = c[free_cols]
        x[free_cols] = np.where(cf < 0, upper[free_cols], lower[free_cols])
        return LpResult("optimal", x, float(c @ x), 0)

    tab = _Tableau(c[free_cols], A_dense[keep], sense[keep], b_adj[keep],
                   lower[free_cols], upper[free_cols])
    status = tab.run(max_iter)
    if status != "optimal":
        return LpResult(status, iterations=tab.iterations)
    x[free_cols] = tab.structural_values()
    return LpResult("optimal", x, float(c @ x), tab.iterations)


class _Tableau:
    def __init__(self, c, A, sense, b, lower, upper):
        m, n = A.shape
        self.m, self.n = m, n
        slack_rows = np.flatnonzero(sense != 0)
        ns = slack_rows.size
        slack_coef = np.where(sense[slack_rows] < 0, 1.0, -1.0)

        A = np.ascontiguousarray(A, dtype=float)
        basis = np.full(m, -1, dtype=np.int64)
        x0, crash_rows, crash_cols = _crash_start(A, np.asarray(sense, dtype=np.int64), b, lower, upper, basis)
        resid = b - A @ x0

        slack_val = resid[slack_rows] / slack_coef
        ok = slack_val >= -FEAS_TOL
        basis[slack_rows[ok]] = n + np.flatnonzero(ok)
        slack_val = np.where(ok, np.maximum(slack_val, 0.0), 0.0)
        art_rows = np.flatnonzero(basis < 0)
        na = art_rows.size
        art_coef = np.where(resid[art_rows] < 0, -1.0, 1.0)

        N = n + ns + na
        self.N = N
        full = np.zeros((m, N + 1))
        full[:, :n] = A
        full[slack_rows, n + np.arange(ns)] = slack_coef
        full[art_rows, n + ns + np.arange(na)] = art_coef
        full[:, N] = b
        basis[art_rows] = n + ns + np.arange(na)
        self.T = _solve_basis(full, basis, crash_rows, crash_cols)
        self.basis = basis

        self.lb = np.concatenate([lower, np.zeros(ns), np.zeros(na)])
        self.ub = np.concatenate([upper, np.full(ns, np.inf), np.full(na, np.inf)])
        self.x = np.concatenate([x0, slack_val, np.abs(resid[art_rows])])
        self.state = np.full(N, _AT_LOWER, dtype=np.int8)
        self.state[:n] = np.where(x0 == lower, _AT_LOWER, np.where(x0 == upper, _AT_UPPER, _FREE))
        self.state[basis] = _BASIC
        self.c = np.concatenate([c, np.zeros(ns + na)])
        self.art_start = n + ns
        self.na = na
        self.iterations = 0
        _refresh_basics(self.T, self.x, self.state, self.basis, N)

    def structural_values(self) -> np.ndarray:
        _refresh_basics(self.T, self.x, self.state, self.basis, self.N)
        v = self.x[:self.n]
        return np.clip(v, self.lb[:self.n], self.ub[:self.n])

    def run(self, max_iter: int | None) -> str:
        if max_iter is None:
            max_iter = 50 * (self.m + self.N) + 1000
        if self.na:
            cost1 = np.zeros(self.N)
            cost1[self.art_start:] = 1.0
            status = self._optimize(cost1, max_iter)
            if status != "optimal":
                return "infeasible" if status == "unbounded" else status
            _refresh_basics(self.T, self.x, self.state, self.basis, self.N)
            infeas = self.x[self.art_start:].sum()
            if infeas > FEAS_TOL * max(1.0, np.abs(self.T[:, self.N]).max()):
                return "infeasible"
            self.ub[self.art_start:] = 0.0
            arts = np.arange(self.art_start, self.N)
            nb = arts[self.state[arts] != _BASIC]
            self.x[nb] = 0.0
            self.state[nb] = _AT_LOWER
        return self._optimize(self.c, max_iter)

    def _optimize(self, cost, max_iter: int) -> str:
        code, self.iterations = _optimize(self.T, self.lb, self.ub, self.x, self.state, self.basis,
                                          cost, self.N, max_iter, self.iterations)
        return _STATUS[code]


@njit(cache=True, nogil=True)
def _reduce_fixed(indptr, indices, data, fixed, lower, b):
    """Dense matrix over the free columns, with fixed columns moved to the right-hand side."""
    m = indptr.size - 1
    n = fixed.size
    colmap = np.full(n, -1, dtype=np.int64)
    k = 0
    for j in range(n):
        if not fixed[j]:
            colmap[j] = k
            k += 1
    out = np.zeros((m, k))
    rhs = b.copy()
    nnz = np.zeros(m, dtype=np.int64)
    for i in range(m):
        for p in range(indptr[i], indptr[i + 1]):
            j = indices[p]
            if fixed[j]:
                rhs[i] -= data[p] * lower[j]
            elif data[p] != 0.0:
                out[i, colmap[j]] += data[p]
                nnz[i] += 1
    return out, rhs, nnz


def _crash_start(A, sense, b, lower, upper, basis):
    """Starting point plus a triangular crash basis for the equality rows.

    Every column starts at the point of its box closest to zero. Columns that
    are singletons among the uncovered equality rows become basic in their
    row and are solved by back-substitution; a row whose solved value falls
    outside its column's bounds is left to a slack or artificial instead.
    """
    x0 = np.clip(0.0, lower, upper)
    rows, cols = _crash_equalities(A, sense)
    _back_substitute(A, b, lower, upper, rows, cols, x0, basis)
    accepted = basis[rows] == cols
    return x0, rows[accepted], cols[accepted]


@njit(cache=True, nogil=True)
def _solve_basis(full, basis, rows, cols):
    """``B^-1 full`` for a basis of unit columns plus a triangular crash block.

    ``rows``/``cols`` are the crash assignments in pick order; a crash column
    is zero in every crash row picked after its own, so the block solves by
    back-substitution. Every other basic column is a signed unit vector.
    """
    m, width = full.shape
    T = full.copy()
    is_crash = np.zeros(m, dtype=np.bool_)
    for k in range(rows.size):
        is_crash[rows[k]] = True
    for k in range(rows.size - 1, -1, -1):
        i, j = rows[k], cols[k]
        for l in range(k + 1, rows.size):
            a = full[i, cols[l]]
            if a != 0.0:
                src = rows[l]
                for q in range(width):
                    T[i, q] -= a * T[src, q]
        piv = full[i, j]
        for q in range(width):
            T[i, q] /= piv
    for r in range(m):
        if is_crash[r]:
            continue
        for k in range(rows.size):
            a = full[r, cols[k]]
            if a != 0.0:
                src = rows[k]
                for q in range(width):
                    T[r, q] -= a * T[src, q]
        piv = full[r, basis[r]]
        for q in range(width):
            T[r, q] /= piv
    return T


@njit(cache=True, nogil=True)
def _crash_equalities(A, sense):
    m, n = A.shape
    alive = sense == 0
    counts = np.zeros(n, dtype=np.int64)
    for i in range(m):
        if alive[i]:
            for j in range(n):
                if abs(A[i, j]) > 1e-9:
                    counts[j] += 1
    used = np.zeros(n, dtype=np.bool_)
    rows = np.empty(m, dtype=np.int64)
    cols = np.empty(m, dtype=np.int64)
    k = 0
    progressed = True
    while progressed:
        progressed = False
        for j in range(n):
            if used[j] or counts[j] != 1:
                continue
            r = -1
            for i in range(m):
                if alive[i] and abs(A[i, j]) > 1e-9:
                    r = i
                    break
            used[j] = True
            if abs(A[r, j]) < 1e-3:
                continue
            rows[k] = r
            cols[k] = j
            k += 1
            alive[r] = False
            for jj in range(n):
                if abs(A[r, jj]) > 1e-9:
                    counts[jj] -= 1
            progressed = True
    return rows[:k], cols[:k]


@njit(cache=True, nogil=True)
def _back_substitute(A, b, lower, upper, rows, cols, x0, basis):
    # a later pick never appears in an earlier row, so solve in reverse pick order
    saved = x0.copy()
    for k in range(cols.size):
        x0[cols[k]] = 0.0
    for k in range(rows.size - 1, -1, -1):
        i, j = rows[k], cols[k]
        v = b[i]
        for jj in range(A.shape[1]):
            if jj != j:
                v -= A[i, jj] * x0[jj]
        v /= A[i, j]
        if lower[j] - FEAS_TOL <= v <= upper[j] + FEAS_TOL:
            x0[j] = min(max(v, lower[j]), upper[j])
            basis[i] = j
        else:
            x0[j] = saved[j]


@njit(cache=True, nogil=True)
def _refresh_basics(T, x, state, basis, N):
    for r in range(T.shape[0]):
        v = T[r, N]
        for j in range(N):
            if state[j] != _BASIC and x[j] != 0.0:
                v -= T[r, j] * x[j]
        x[basis[r]] = v


@njit(cache=True, nogil=True)
def _reduced_costs(T, cost, basis, N):
    d = cost.copy()
    for r in range(T.shape[0]):
        cb = cost[basis[r]]
        if cb != 0.0:
            for j in range(N):
                d[j] -= cb * T[r, j]
    for r in range(T.shape[0]):
        d[basis[r]] = 0.0
    return d


@njit(cache=True, nogil=True)
def _optimize(T, lb, ub, x, state, basis, cost, N, max_iter, iterations):
    m = T.shape[0]
    d = _reduced_costs(T, cost, basis, N)
    degenerate = 0
    bland = False
    since_refresh = 0
    alpha = np.empty(m)
    room = np.empty(m)
    support = np.empty(N + 1, dtype=np.int64)
    while True:
        if iterations >= max_iter:
            return 2, iterations
        if since_refresh >= REFRESH_EVERY:
            _refresh_basics(T, x, state, basis, N)
            d = _reduced_costs(T, cost, basis, N)
            since_refresh = 0

        # pricing: largest improving reduced cost, or the first one under Bland
        j = -1
        best = 0.0
        for k in range(N):
            s = state[k]
            if s == _BASIC or ub[k] <= lb[k]:
                continue
            dk = d[k]
            if (s == _AT_LOWER and dk < -OPT_TOL) or (s == _AT_UPPER and dk > OPT_TOL) \
                    or (s == _FREE and abs(dk) > OPT_TOL):
                if bland:
                    j = k
                    break
                if abs(dk) > best:
                    best = abs(dk)
                    j = k
        if j < 0:
            # confirm with fresh reduced costs before declaring optimality
            if since_refresh:
                _refresh_basics(T, x, state, basis, N)
                d = _reduced_costs(T, cost, basis, N)
                since_refresh = 0
                continue
            return 0, iterations
        if state[j] == _FREE:
            direction = -1.0 if d[j] > 0 else 1.0
        else:
            direction = 1.0 if state[j] == _AT_LOWER else -1.0

        # ratio test; Harris picks the largest pivot among rows within the relaxed step
        tmax = np.inf
        for r in range(m):
            a = direction * T[r, j]
            alpha[r] = a
            q = basis[r]
            if a > PIVOT_TOL:
                room[r] = max((x[q] - lb[q]) / a, 0.0)
                relaxed = (x[q] - lb[q] + FEAS_TOL) / a
            elif a < -PIVOT_TOL:
                room[r] = max((ub[q] - x[q]) / -a, 0.0)
                relaxed = (ub[q] - x[q] + FEAS_TOL) / -a
            else:
                room[r] = np.inf
                relaxed = np.inf
            if bland:
                relaxed = room[r]
            if relaxed < tmax:
                tmax = relaxed
        row = -1
        t = np.inf
        if tmax < np.inf:
            if bland:
                for r in range(m):
                    if room[r] <= tmax + 1e-12 and (row < 0 or basis[r] < basis[row]):
                        row = r
            else:
                big = -1.0
                for r in range(m):
                    if room[r] <= tmax and abs(alpha[r]) > big:
                        big = abs(alpha[r])
                        row = r
            t = room[row]

        span = ub[j] - x[j] if direction > 0 else x[j] - lb[j]
        if span <= t:
            if not span < np.inf:
                return 1, iterations
            # bound flip, no basis change
            for r in range(m):
                x[basis[r]] -= span * alpha[r]
            if direction > 0:
                x[j] = ub[j]
                state[j] = _AT_UPPER
            else:
                x[j] = lb[j]
                state[j] = _AT_LOWER
            iterations += 1
            since_refresh += 1
            degenerate = 0
            bland = False
            continue

        leaving = basis[row]
        for r in range(m):
            x[basis[r]] -= t * alpha[r]
        x[j] += direction * t
        if alpha[row] > 0:
            x[leaving] = lb[leaving]
            state[leaving] = _AT_LOWER
        else:
            x[leaving] = ub[leaving]
            state[leaving] = _AT_UPPER
        state[j] = _BASIC
        basis[row] = j

        # pivot, touching only the rows the entering column reaches and the
        # columns where the pivot row is non-zero
        piv = T[row, j]
        nz = 0
        for k in range(N + 1):
            v = T[row, k]
            if v != 0.0:
                v /= piv
                T[row, k] = v
                support[nz] = k
                nz += 1
        for r in range(m):
            f = T[r, j]
            if r != row and f != 0.0:
                for q in range(nz):
                    k = support[q]
                    T[r, k] -= f * T[row, k]
        dj = d[j]
        for q in range(nz):
            k = support[q]
            if k < N:
                d[k] -= dj * T[row, k]
        d[j] = 0.0

        iterations += 1
        since_refresh += 1
        if t <= 1e-12:
            degenerate += 1
            if degenerate > DEGENERATE_RUN:
                bland = True
        else:
            degenerate = 0
            bland = False
