"""Distance costs, actual perturbations, and the ordering cost.

Sums over steps go through ``math.fsum`` so their value does not depend on
the order the terms arrive in; two orders that share the same set of
non-zero interaction terms produce bit-identical costs.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .feature_space import ActionSet, DatasetStats

CDF_CLIP = 0.01


@dataclass(frozen=True)
class DistanceCost:
    """``costs[d][i]`` is the cost of candidate ``candidates[d][i]``; index 0 is the null action."""

    candidates: tuple[np.ndarray, ...]
    costs: tuple[np.ndarray, ...]
    kind: str

    def __post_init__(self):
        for d, (cand, c) in enumerate(zip(self.candidates, self.costs)):
            if c.shape != cand.shape:
                raise ValueError(f"feature {d}: {c.size} costs for {cand.size} candidates")
            if c[0] != 0.0 or np.any(c < 0) or not np.all(np.isfinite(c)):
                raise ValueError(f"feature {d}: costs must be finite, non-negative, and 0 for the null action")

    def index_of(self, d: int, value: float) -> int:
        hits = np.flatnonzero(np.abs(self.candidates[d] - value) <= 1e-9 * max(1.0, abs(value)))
        if hits.size == 0:
            raise KeyError(f"feature {d}: {value} is not a candidate perturbation")
        return int(hits[0])

    def __call__(self, a) -> float:
        return math.fsum(float(self.costs[d][self.index_of(d, v)])
                         for d, v in enumerate(a) if v != 0.0)


def tlps_cost(action_set: ActionSet, instance, stats: DatasetStats) -> DistanceCost:
    """Total log-percentile shift: ``|log((1 - Q(x + a)) / (1 - Q(x)))|`` per feature."""
    x = np.asarray(instance, dtype=float)
    costs = []
    for d, cand in enumerate(action_set.candidates):
        q0 = _clipped_cdf(stats, d, x[d])
        c = np.array([abs(math.log((1.0 - _clipped_cdf(stats, d, x[d] + a)) / (1.0 - q0))) for a in cand])
        c[0] = 0.0
        costs.append(c)
    return DistanceCost(action_set.candidates, tuple(costs), "tlps")


def _clipped_cdf(stats: DatasetStats, d: int, v: float) -> float:
    return min(max(stats.cdf(d, v), CDF_CLIP), 1.0 - CDF_CLIP)


def mad_cost(action_set: ActionSet, stats: DatasetStats) -> DistanceCost:
    """``|a| / MAD_d``, falling back to the standard deviation, then to 1."""
    costs = []
    for d, cand in enumerate(action_set.candidates):
        w = stats.mad[d] if stats.mad[d] > 0 else stats.std[d] if stats.std[d] > 0 else 1.0
        costs.append(np.abs(cand) / w)
    return DistanceCost(action_set.candidates, tuple(costs), "mad")


def table_cost(action_set: ActionSet, feature_names: Sequence[str], table: dict) -> DistanceCost:
    """User cost table ``{"default": c?, "features": {name: {perturbation: cost}}}``.

    Keys are perturbation amounts written as numbers. Every candidate needs an
    entry unless a default is declared.
    """
    default = table.get("default")
    per_feature = table.get("features", {})
    costs = []
    for d, cand in enumerate(action_set.candidates):
        entries = [(float(k), float(v)) for k, v in per_feature.get(feature_names[d], {}).items()]
        row = [0.0]
        for a in cand[1:]:
            match = [v for k, v in entries if abs(k - a) <= 1e-9 * max(1.0, abs(a))]
            if match:
                row.append(match[0])
            elif default is not None:
                row.append(float(default))
            else:
                raise ValueError(f"cost table has no entry for {feature_names[d]!r} perturbation {a}")
        costs.append(np.array(row))
    return DistanceCost(action_set.candidates, tuple(costs), "table")


def load_cost_table(path) -> dict:
    with open(os.fspath(path), encoding="utf-8") as fh:
        return json.load(fh)


def _check_order(a, sigma) -> None:
    supp = {d for d, v in enumerate(a) if v != 0.0}
    if len(set(sigma)) != len(sigma) or set(sigma) != supp:
        raise ValueError(f"order {tuple(sigma)} is not a permutation of the support {sorted(supp)}")


def actual_perturbations(a, sigma: Sequence[int], M) -> np.ndarray:
    """Change applied at each step once earlier steps have propagated through ``M``."""
    a = np.asarray(a, dtype=float)
    M = np.asarray(M, dtype=float)
    _check_order(a, sigma)
    deltas: list[float] = []
    for k, d in enumerate(sigma):
        carried = math.fsum(M[sigma[l], d] * deltas[l] for l in range(k))
        deltas.append(a[d] - carried)
    return np.array(deltas)


def ordering_cost(a, sigma: Sequence[int], M, scale=None) -> float:
    deltas = actual_perturbations(a, sigma, M)
    s = np.ones(len(a)) if scale is None else np.asarray(scale, dtype=float)
    return math.fsum(s[d] * abs(v) for d, v in zip(sigma, deltas))


@dataclass(frozen=True)
class CostBreakdown:
    dist: float
    ord: float
    total: float


def total_cost(a, sigma: Sequence[int], distance: DistanceCost, M, scale, gamma: float) -> CostBreakdown:
    if gamma < 0:
        raise ValueError("gamma must be non-negative")
    c_dist = distance(a)
    c_ord = ordering_cost(a, sigma, M, scale)
    return CostBreakdown(c_dist, c_ord, c_dist + gamma * c_ord)


def default_scaling(stats: DatasetStats) -> np.ndarray:
    std = np.asarray(stats.std, dtype=float)
    safe = np.where(std > 0, std, 1.0)
    return np.where(std > 0, 1.0 / safe, 1.0)


@dataclass(frozen=True)
class OrderedAction:
    a: np.ndarray
    sigma: tuple[int, ...]
    deltas: np.ndarray
    cost_dist: float
    cost_ord: float
    cost_total: float
    gamma: float

    @classmethod
    def build(cls, a, sigma, distance: DistanceCost, M, scale, gamma: float) -> "OrderedAction":
        a = np.asarray(a, dtype=float)
        sigma = tuple(int(d) for d in sigma)
        br = total_cost(a, sigma, distance, M, scale, gamma)
        return cls(a, sigma, actual_perturbations(a, sigma, M), br.dist, br.ord, br.total, float(gamma))

    def to_dict(self, feature_names: Sequence[str] | None = None) -> dict:
        names = feature_names or [f"x{d}" for d in range(self.a.size)]
        return {
            "action": {names[d]: float(v) for d, v in enumerate(self.a) if v != 0.0},
            "order": [names[d] for d in self.sigma],
            "deltas": [float(v) for v in self.deltas],
            "cost_dist": self.cost_dist,
            "cost_ord": self.cost_ord,
            "cost_total": self.cost_total,
            "gamma": self.gamma,
        }
