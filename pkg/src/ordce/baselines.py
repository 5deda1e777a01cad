"""Greedy ordering baseline and an exhaustive oracle for small problems."""

from __future__ import annotations

import itertools
import math
import time
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .cost_model import OrderedAction, ordering_cost
from .formulation import Extraction, OrdceProblem, extract


class BudgetExceeded(RuntimeError):
    pass


@dataclass(frozen=True)
class SearchBudget:
    max_candidates: int = 2_000_000
    time_limit: float = 600.0

    def __post_init__(self):
        if self.max_candidates <= 0 or self.time_limit <= 0:
            raise ValueError("search budget limits must be positive")


def greedy_order(a_star, M, scale=None, scaled: bool = True) -> tuple[int, ...]:
    """Repeatedly take the remaining feature with the smallest pending change.

    The pending change of ``d`` is ``a*[d]`` minus what earlier steps already
    carried over through ``M``; with ``scaled`` it is weighted by ``scale[d]``.
    Ties go to the smallest feature index.
    """
    a = np.asarray(a_star, dtype=float)
    M = np.asarray(M, dtype=float)
    s = np.ones(a.size) if scale is None or not scaled else np.asarray(scale, dtype=float)
    remaining = [d for d in range(a.size) if a[d] != 0.0]
    order: list[int] = []
    deltas: list[float] = []
    while remaining:
        pending = {d: a[d] - math.fsum(M[order[l], d] * deltas[l] for l in range(len(order)))
                   for d in remaining}
        best = min(remaining, key=lambda d: (s[d] * abs(pending[d]), d))
        order.append(best)
        deltas.append(pending[best])
        remaining.remove(best)
    return tuple(order)


def greedy(problem: OrdceProblem, scaled: bool = True) -> Extraction:
    """Distance-only optimal perturbation, then a greedy execution order."""
    base = extract(problem.with_gamma(0.0))
    if base.action is None:
        return Extraction(base.status, None, base.solver, method="greedy")
    a = base.action.a
    order = greedy_order(a, problem.M, problem.scale, scaled=scaled)
    action = OrderedAction.build(a, order, problem.distance, problem.M, problem.scale, problem.gamma)
    return Extraction(base.status, action, base.solver, method="greedy")


def enumeration_size(sizes: Sequence[int], K: int) -> int:
    total = 0
    for r in range(0, K + 1):
        for S in itertools.combinations(range(len(sizes)), r):
            total += math.prod(sizes[d] - 1 for d in S) * math.factorial(r)
    return total


def brute_force(problem: OrdceProblem, budget: SearchBudget = SearchBudget()) -> Extraction:
    """Global minimizer over every action with at most ``K`` perturbed features and every order.

    Ties are broken by the smallest (candidate-index vector, order) pair, so
    the answer does not depend on enumeration order. Refuses, rather than
    truncates, when the search space exceeds ``budget``.
    """
    p = problem
    cand = p.action_set.candidates
    sizes = [c.size for c in cand]
    count = enumeration_size(sizes, p.K)
    if count > budget.max_candidates:
        raise BudgetExceeded(f"{count} candidates exceed the budget of {budget.max_candidates}")
    start = time.perf_counter()
    x = p.instance
    best_key = None
    best = None
    for r in range(1, p.K + 1):
        for S in itertools.combinations(range(p.D), r):
            for idx in itertools.product(*(range(1, sizes[d]) for d in S)):
                if time.perf_counter() - start > budget.time_limit:
                    raise BudgetExceeded("brute-force time limit reached")
                a = np.zeros(p.D)
                full_idx = [0] * p.D
                for d, i in zip(S, idx):
                    a[d] = cand[d][i]
                    full_idx[d] = i
                if not _onehot_ok(p, x + a) or p.classifier.predict(x + a) != 1:
                    continue
                c_dist = p.distance(a)
                for sigma in itertools.permutations(S):
                    c_ord = ordering_cost(a, sigma, p.M, p.scale)
                    total = c_dist + p.gamma * c_ord
                    key = (total, tuple(full_idx), sigma)
                    if best_key is None or key < best_key:
                        best_key = key
                        best = (a, sigma)
    if best is None:
        return Extraction("infeasible", None, method="brute_force")
    action = OrderedAction.build(best[0], best[1], p.distance, p.M, p.scale, p.gamma)
    return Extraction("optimal", action, method="brute_force")


def _onehot_ok(p: OrdceProblem, z) -> bool:
    return all(abs(sum(z[d] for d in g) - 1.0) <= 1e-9 for g in p.onehot_groups)
