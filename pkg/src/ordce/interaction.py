"""Causal-DAG adjacency matrices and the interaction matrices derived from them."""

from __future__ import annotations

import heapq
import json
import os
from typing import Sequence

import numpy as np

IDENTITY_TOL = 1e-9


class CycleError(ValueError):
    def __init__(self, cycle: list[int]):
        self.cycle = cycle
        super().__init__("adjacency matrix has a directed cycle: " + " -> ".join(map(str, cycle + cycle[:1])))


class InteractionFormatError(ValueError):
    pass


def validate_dag(B) -> list[int]:
    """Topological order of the digraph ``{(i, j) : B[i, j] != 0}``.

    Kahn's algorithm, always releasing the smallest ready index first, so an
    edgeless graph comes back in ascending order.
    """
    B = np.asarray(B, dtype=float)
    if B.ndim != 2 or B.shape[0] != B.shape[1]:
        raise ValueError(f"adjacency matrix must be square, got shape {B.shape}")
    adj = B != 0
    D = B.shape[0]
    indeg = adj.sum(axis=0).astype(int)
    ready = [j for j in range(D) if indeg[j] == 0]
    heapq.heapify(ready)
    order = []
    while ready:
        i = heapq.heappop(ready)
        order.append(i)
        for j in np.flatnonzero(adj[i]):
            indeg[j] -= 1
            if indeg[j] == 0:
                heapq.heappush(ready, int(j))
    if len(order) < D:
        raise CycleError(_find_cycle(adj, set(range(D)) - set(order)))
    return order


def _find_cycle(adj: np.ndarray, nodes: set[int]) -> list[int]:
    # every leftover node has a leftover predecessor; walk backwards until a repeat
    start = min(nodes)
    seen: dict[int, int] = {}
    path = []
    v = start
    while v not in seen:
        seen[v] = len(path)
        path.append(v)
        v = next(int(u) for u in np.flatnonzero(adj[:, v]) if int(u) in nodes)
    cycle = path[seen[v]:]
    cycle.reverse()
    return cycle


def compute_interaction_matrix(B) -> np.ndarray:
    """``M = I + B + B^2 + ... + B^(D-1)``, stopping once a power vanishes."""
    B = np.asarray(B, dtype=float)
    validate_dag(B)
    D = B.shape[0]
    M = np.eye(D)
    power = B.copy()
    for _ in range(1, D):
        if not power.any():
            break
        M += power
        power = power @ B
    return M


def check_interaction_matrix(M) -> np.ndarray:
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError(f"interaction matrix must be square, got shape {M.shape}")
    if not np.all(np.diag(M) == 1.0):
        raise ValueError("interaction matrix must have a unit diagonal")
    return M


def adjacency_from_edges(names: Sequence[str], edges) -> np.ndarray:
    index = {n: i for i, n in enumerate(names)}
    B = np.zeros((len(names), len(names)))
    for e in edges:
        try:
            i, j = index[e["from"]], index[e["to"]]
        except KeyError as exc:
            raise InteractionFormatError(f"edge references unknown feature {exc}") from None
        B[i, j] = float(e["weight"])
    return B


def interaction_from_dict(doc: dict, feature_names: Sequence[str] | None = None) -> np.ndarray:
    """Interaction matrix from a DAG document.

    Two layouts are accepted: ``{"features": [...], "edges": [{"from", "to",
    "weight"}]}`` or ``{"matrix_is": "adjacency"|"interaction", "matrix": [[...]]}``.
    When ``feature_names`` is given the document's feature list must match it.
    """
    names = doc.get("features")
    if feature_names is not None and names is not None and list(names) != list(feature_names):
        raise InteractionFormatError(f"DAG features {names} do not match model features {list(feature_names)}")
    if "matrix" in doc:
        kind = doc.get("matrix_is", "adjacency")
        mat = np.asarray(doc["matrix"], dtype=float)
        if kind == "adjacency":
            return compute_interaction_matrix(mat)
        if kind == "interaction":
            return check_interaction_matrix(mat)
        raise InteractionFormatError(f"matrix_is must be 'adjacency' or 'interaction', got {kind!r}")
    if names is None:
        raise InteractionFormatError("DAG document needs 'features' with 'edges', or a 'matrix'")
    return compute_interaction_matrix(adjacency_from_edges(names, doc.get("edges", [])))


def load_interaction(source, feature_names: Sequence[str] | None = None) -> np.ndarray:
    if isinstance(source, dict):
        return interaction_from_dict(source, feature_names)
    with open(os.fspath(source), encoding="utf-8") as fh:
        return interaction_from_dict(json.load(fh), feature_names)


def dag_document(names: Sequence[str], B) -> dict:
    B = np.asarray(B, dtype=float)
    edges = [{"from": names[i], "to": names[j], "weight": float(B[i, j])}
             for i in range(B.shape[0]) for j in range(B.shape[1]) if B[i, j] != 0]
    return {"features": list(names), "edges": edges}
