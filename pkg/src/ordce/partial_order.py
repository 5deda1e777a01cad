"""Relax a total execution order into the partial order that fixes its ordering cost.

Starting from the path ``sigma_1 -> ... -> sigma_K``, take its transitive
closure, drop every edge between two features that do not interact in either
direction, and return the transitive reduction of what is left. Any linear
extension of the result has the same ordering cost as the original order.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .cost_model import OrderedAction


class ExtensionLimitExceeded(RuntimeError):
    pass


@dataclass(frozen=True)
class PartialOrderDag:
    nodes: tuple[int, ...]
    edges: frozenset[tuple[int, int]]

    def successors(self, u: int) -> list[int]:
        return sorted(v for a, v in self.edges if a == u)

    def predecessors(self, v: int) -> list[int]:
        return sorted(u for u, b in self.edges if b == v)

    def ancestors(self, v: int) -> set[int]:
        return {u for u in self.nodes if v in _reachable(self.edges, u)}

    def sorted_edges(self) -> list[tuple[int, int]]:
        order = {v: i for i, v in enumerate(self.nodes)}
        return sorted(self.edges, key=lambda e: (order[e[0]], order[e[1]]))

    def to_dict(self, feature_names: Sequence[str] | None = None) -> dict:
        name = (lambda d: feature_names[d]) if feature_names else (lambda d: d)
        return {"nodes": [name(v) for v in self.nodes],
                "edges": [[name(u), name(v)] for u, v in self.sorted_edges()]}

    def to_dot(self, feature_names: Sequence[str] | None = None, graph_name: str = "partial_order") -> str:
        label = (lambda d: feature_names[d]) if feature_names else (lambda d: f"x{d}")
        lines = [f"digraph {graph_name} {{", "  rankdir=LR;"]
        for v in self.nodes:
            lines.append(f'  n{v} [label="{_dot_escape(label(v))}"];')
        for u, v in self.sorted_edges():
            lines.append(f"  n{u} -> n{v};")
        lines.append("}")
        return "\n".join(lines) + "\n"


def _dot_escape(text: str) -> str:
    return str(text).replace("\\", "\\\\").replace('"', '\\"')


def _reachable(edges, source: int) -> set[int]:
    """Nodes reachable from ``source`` by a path of one or more edges."""
    adj: dict[int, list[int]] = {}
    for u, v in edges:
        adj.setdefault(u, []).append(v)
    seen: set[int] = set()
    stack = list(adj.get(source, []))
    while stack:
        v = stack.pop()
        if v not in seen:
            seen.add(v)
            stack.extend(adj.get(v, []))
    return seen


def transitive_closure(nodes: Sequence[int], edges) -> set[tuple[int, int]]:
    edges = set(edges)
    return {(u, v) for u in nodes for v in _reachable(edges, u)}


def transitive_reduction(nodes: Sequence[int], edges) -> set[tuple[int, int]]:
    """Drop ``(u, v)`` whenever some other successor of ``u`` reaches ``v``. Input must be acyclic."""
    edges = set(edges)
    reach = {u: _reachable(edges, u) for u in nodes}
    if any(u in reach[u] for u in nodes):
        raise ValueError("transitive reduction needs an acyclic graph")
    kept = set()
    for u, v in edges:
        if not any(w != v and v in reach[w] for (a, w) in edges if a == u):
            kept.add((u, v))
    return kept


def reduce_to_partial_order(action: OrderedAction | Sequence[int], M, tau: float = 0.0) -> PartialOrderDag:
    """Partial order over the perturbed features of ``action``.

    ``action`` is an :class:`OrderedAction` or just its order. Pairs with
    ``|M[i, j]| <= tau`` and ``|M[j, i]| <= tau`` count as non-interacting;
    the default ``tau = 0`` means exact zeros.
    """
    if tau < 0:
        raise ValueError("tau must be non-negative")
    sigma = tuple(int(d) for d in (action.sigma if isinstance(action, OrderedAction) else action))
    if len(set(sigma)) != len(sigma):
        raise ValueError(f"order {sigma} repeats a feature")
    M = np.asarray(M, dtype=float)
    path = {(sigma[k], sigma[k + 1]) for k in range(len(sigma) - 1)}
    closure = transitive_closure(sigma, path)
    interacting = {(i, j) for i, j in closure if abs(M[i, j]) > tau or abs(M[j, i]) > tau}
    return PartialOrderDag(sigma, frozenset(transitive_reduction(sigma, interacting)))


def count_linear_extensions(dag: PartialOrderDag) -> int:
    nodes = list(dag.nodes)
    idx = {v: i for i, v in enumerate(nodes)}
    need = [0] * len(nodes)
    for u, v in dag.edges:
        need[idx[v]] |= 1 << idx[u]
    ways = [0] * (1 << len(nodes))
    ways[0] = 1
    for mask in range(1 << len(nodes)):
        if ways[mask]:
            for i in range(len(nodes)):
                if not mask >> i & 1 and need[i] & mask == need[i]:
                    ways[mask | 1 << i] += ways[mask]
    return ways[-1]


def linear_extensions(dag: PartialOrderDag, limit: int = 100_000) -> list[tuple[int, ...]]:
    """Every topological order of ``dag`` in lexicographic order of feature indices.

    Refuses with :class:`ExtensionLimitExceeded` when there are more than ``limit``.
    """
    total = count_linear_extensions(dag)
    if total > limit:
        raise ExtensionLimitExceeded(f"{total} linear extensions exceed the limit of {limit}")
    preds = {v: set(dag.predecessors(v)) for v in dag.nodes}
    out: list[tuple[int, ...]] = []
    prefix: list[int] = []
    placed: set[int] = set()

    def extend():
        if len(prefix) == len(dag.nodes):
            out.append(tuple(prefix))
            return
        for v in sorted(dag.nodes):
            if v not in placed and preds[v] <= placed:
                prefix.append(v)
                placed.add(v)
                extend()
                placed.remove(v)
                prefix.pop()

    extend()
    return out


def topological_order(dag: PartialOrderDag) -> tuple[int, ...]:
    """Smallest linear extension in lexicographic order."""
    indeg = {v: 0 for v in dag.nodes}
    for _, v in dag.edges:
        indeg[v] += 1
    ready = [v for v, n in indeg.items() if n == 0]
    heapq.heapify(ready)
    order = []
    while ready:
        u = heapq.heappop(ready)
        order.append(u)
        for v in dag.successors(u):
            indeg[v] -= 1
            if indeg[v] == 0:
                heapq.heappush(ready, v)
    return tuple(order)
