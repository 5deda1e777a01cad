"""Best-first branch-and-bound over LP relaxations."""

from __future__ import annotations

import heapq
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from numba import njit

from .model import MilpModel, ModelArrays
from .simplex import solve_lp

INT_TOL = 1e-6
FEAS_TOL = 1e-6


@dataclass(frozen=True)
class TraceEntry:
    """One solved node: its LP value and the branching box it was solved over."""

    seq: int
    objective: float
    lower: np.ndarray
    upper: np.ndarray


@dataclass
class SolveResult:
    status: str  # optimal | infeasible | time_limit_with_incumbent | time_limit_no_incumbent
    x: np.ndarray | None
    objective: float
    best_bound: float
    nodes: int
    wall_time: float
    trace: list[TraceEntry] = field(default_factory=list, repr=False)

    @property
    def has_solution(self) -> bool:
        return self.x is not None


def propagate_bounds(arr: ModelArrays, lower: np.ndarray, upper: np.ndarray,
                     max_passes: int = 8) -> bool:
    """Tighten ``lower``/``upper`` in place from row activities.

    Each pass derives new bounds for every column from the activity ranges
    of the rows it appears in, all from the bounds at the start of the pass.
    Returns False when some row or domain becomes infeasible. Integer bounds
    are rounded.
    """
    A = arr.A
    return _propagate(A.indptr, A.indices, A.data, arr.sense.astype(np.int64), arr.b,
                      arr.integer, lower, upper, max_passes)


@njit(cache=True, nogil=True)
def _propagate(indptr, cols, vals, sense, b, integer, lower, upper, max_passes):
    m = indptr.size - 1
    n = lower.size
    new_lo = np.empty(n)
    new_hi = np.empty(n)
    for _ in range(max_passes):
        new_lo[:] = lower
        new_hi[:] = upper
        for i in range(m):
            min_act = 0.0
            max_act = 0.0
            size = max(1.0, abs(b[i]))
            for p in range(indptr[i], indptr[i + 1]):
                a = vals[p]
                j = cols[p]
                if a > 0:
                    min_act += a * lower[j]
                    max_act += a * upper[j]
                else:
                    min_act += a * upper[j]
                    max_act += a * lower[j]
                size = max(size, abs(a * lower[j]), abs(a * upper[j]))
            # activities of fixed columns carry rounding from earlier passes
            tol = FEAS_TOL * size
            if (sense[i] <= 0 and min_act > b[i] + tol) or (sense[i] >= 0 and max_act < b[i] - tol):
                return False
            for p in range(indptr[i], indptr[i + 1]):
                a = vals[p]
                j = cols[p]
                own_min = a * lower[j] if a > 0 else a * upper[j]
                own_max = a * upper[j] if a > 0 else a * lower[j]
                if sense[i] <= 0:
                    # a x_j <= b - (min_act - own min contribution)
                    cap = (b[i] - (min_act - own_min)) / a
                    if a > 0:
                        new_hi[j] = min(new_hi[j], cap)
                    else:
                        new_lo[j] = max(new_lo[j], cap)
                if sense[i] >= 0:
                    # a x_j >= b - (max_act - own max contribution)
                    flo = (b[i] - (max_act - own_max)) / a
                    if a > 0:
                        new_lo[j] = max(new_lo[j], flo)
                    else:
                        new_hi[j] = min(new_hi[j], flo)
        changed = False
        for j in range(n):
            lo, hi = new_lo[j], new_hi[j]
            if integer[j]:
                lo = np.ceil(lo - INT_TOL)
                hi = np.floor(hi + INT_TOL)
            else:
                # derived continuous bounds are loosened by the feasibility
                # tolerance so they never cut off a point the LP would accept
                if lo > lower[j]:
                    lo -= FEAS_TOL * max(1.0, abs(lo))
                if hi < upper[j]:
                    hi += FEAS_TOL * max(1.0, abs(hi))
            lo = max(lo, lower[j])
            hi = min(hi, upper[j])
            if lo > hi + FEAS_TOL * max(1.0, abs(hi)):
                return False
            if not integer[j] and hi - lo <= 4.0 * FEAS_TOL * max(1.0, abs(lo), abs(hi)):
                # a pinched continuous column is fixed so the LP can substitute it out
                lo = hi = min(max(0.5 * (new_lo[j] + new_hi[j]), lo), hi)
            elif lo > hi:
                lo = hi = 0.5 * (lo + hi)
            if lo - lower[j] > 1e-7 or upper[j] - hi > 1e-7:
                changed = True
            lower[j] = lo
            upper[j] = hi
        if not changed:
            break
    return True


def _most_fractional(x: np.ndarray, integer: np.ndarray) -> int:
    frac = np.abs(x - np.round(x))
    frac[~integer] = 0.0
    j = int(np.argmax(frac))  # argmax returns the smallest index among ties
    return j if frac[j] > INT_TOL else -1


@dataclass(order=True)
class _Node:
    bound: float
    seq: int
    lower: np.ndarray = field(compare=False)
    upper: np.ndarray = field(compare=False)


def solve_bnb(model: MilpModel, time_limit: float = 300.0, gap_tol: float = 1e-6,
              threads: int = 1, record_trace: bool = False) -> SolveResult:
    """Minimize ``model`` by best-first branch-and-bound.

    Nodes are ordered by their parent's LP bound, ties by creation order; the
    down branch is created first. The branching variable is the integer
    column whose LP value is farthest from integral (smallest index on ties).
    A node is pruned once its bound reaches the incumbent minus the gap.
    """
    start = time.perf_counter()
    arr = model.arrays()
    integer = arr.integer
    incumbent: np.ndarray | None = None
    inc_obj = math.inf
    trace: list[TraceEntry] = []
    nodes = 0
    seq = 0

    def gap(value: float) -> float:
        return gap_tol * max(1.0, abs(value)) if math.isfinite(value) else 0.0

    def evaluate(node: _Node):
        lo, hi = node.lower.copy(), node.upper.copy()
        if not propagate_bounds(arr, lo, hi):
            return node, lo, hi, None
        return node, lo, hi, solve_lp(arr.c, arr.A, arr.sense, arr.b, lo, hi)

    def accept(x: np.ndarray, obj: float) -> None:
        nonlocal incumbent, inc_obj
        if obj < inc_obj - gap(inc_obj) or (
                obj <= inc_obj + gap(inc_obj) and incumbent is not None
                and tuple(x) < tuple(incumbent)):
            incumbent, inc_obj = x, obj

    root = _Node(-math.inf, seq, arr.lower.copy(), arr.upper.copy())
    seq += 1
    heap = [root]
    timed_out = False
    pool = ThreadPoolExecutor(max_workers=threads) if threads > 1 else None
    try:
        while heap:
            if time.perf_counter() - start > time_limit:
                timed_out = True
                break
            batch = []
            while heap and len(batch) < max(1, threads):
                node = heapq.heappop(heap)
                if node.bound >= inc_obj - gap(inc_obj):
                    continue
                batch.append(node)
            if not batch:
                break
            results = list(pool.map(evaluate, batch)) if pool else [evaluate(n) for n in batch]
            for node, lo, hi, lp in results:
                nodes += 1
                if lp is None or not lp.optimal:
                    continue
                if record_trace:
                    trace.append(TraceEntry(node.seq, lp.objective, node.lower, node.upper))
                if lp.objective >= inc_obj - gap(inc_obj):
                    continue
                j = _most_fractional(lp.x, integer)
                if j < 0:
                    x = lp.x.copy()
                    x[integer] = np.round(x[integer])
                    if model.violations(x, FEAS_TOL):
                        x = _repair(arr, x, lo, hi)
                        if x is None:
                            continue
                    accept(x, float(arr.c @ x))
                    continue
                v = lp.x[j]
                down_hi = hi.copy()
                down_hi[j] = math.floor(v)
                up_lo = lo.copy()
                up_lo[j] = math.ceil(v)
                heapq.heappush(heap, _Node(lp.objective, seq, lo.copy(), down_hi))
                heapq.heappush(heap, _Node(lp.objective, seq + 1, up_lo, hi.copy()))
                seq += 2
    finally:
        if pool:
            pool.shutdown()

    wall = time.perf_counter() - start
    open_bounds = [n.bound for n in heap if n.bound < inc_obj - gap(inc_obj)]
    if timed_out and open_bounds:
        best_bound = min(min(open_bounds), inc_obj)
        status = "time_limit_with_incumbent" if incumbent is not None else "time_limit_no_incumbent"
    elif incumbent is None:
        best_bound = math.inf
        status = "infeasible"
    else:
        best_bound = inc_obj
        status = "optimal"
    return SolveResult(status, incumbent, inc_obj if incumbent is not None else math.nan,
                       best_bound, nodes, wall, trace)


def _repair(arr: ModelArrays, x: np.ndarray, lo: np.ndarray, hi: np.ndarray):
    """Re-solve the continuous part with integers fixed at their rounded values."""
    lo2, hi2 = lo.copy(), hi.copy()
    lo2[arr.integer] = hi2[arr.integer] = x[arr.integer]
    lp = solve_lp(arr.c, arr.A, arr.sense, arr.b, lo2, hi2)
    return lp.x if lp.optimal else None
