"""Additive classifiers ``H(x) = sgn(sum_t w_t h_t(x) - b)``.

Three variants: a linear model (``h_d(x) = x_d``), an ensemble of decision
trees with leaf labels in {-1, +1}, and a one-hidden-layer ReLU network. A
score of exactly zero is classified as +1, matching the ``>= b`` validity
row of the optimization model.

Tree splits send ``x[feature] <= threshold`` to the left child.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, field
from typing import Union

import numpy as np

MODEL_FORMAT_VERSION = 1


class ModelFormatError(ValueError):
    pass


# -- trees -------------------------------------------------------------------

@dataclass(frozen=True)
class Leaf:
    label: int


@dataclass(frozen=True)
class Split:
    feature: int
    threshold: float
    left: "Node"
    right: "Node"


Node = Union[Leaf, Split]


@dataclass(frozen=True)
class Interval:
    lo: float = -math.inf
    hi: float = math.inf
    lo_closed: bool = False
    hi_closed: bool = False

    def contains(self, v: float) -> bool:
        above = v >= self.lo if self.lo_closed else v > self.lo
        below = v <= self.hi if self.hi_closed else v < self.hi
        return above and below

    def __str__(self) -> str:
        return f"{'[' if self.lo_closed else '('}{self.lo}, {self.hi}{']' if self.hi_closed else ')'}"


Box = tuple[Interval, ...]


def box_contains(box: Box, x) -> bool:
    return all(iv.contains(v) for iv, v in zip(box, x))


def traverse(node: Node, x) -> int:
    while isinstance(node, Split):
        node = node.left if x[node.feature] <= node.threshold else node.right
    return node.label


def extract_leaf_regions(tree: Node, domain: Box) -> list[tuple[Box, int]]:
    """One axis-aligned box per leaf, in left-to-right leaf order.

    ``domain`` gives the starting interval of every feature; each split on the
    path narrows it, closing at the threshold on the left and opening on the right.
    """
    out: list[tuple[Box, int]] = []

    def walk(node, box):
        if isinstance(node, Leaf):
            out.append((box, node.label))
            return
        if not isinstance(node, Split):
            raise ModelFormatError(f"malformed tree node {node!r}")
        d, th = node.feature, node.threshold
        iv = box[d]
        if th < iv.hi or (th == iv.hi and iv.hi_closed):
            left_iv = Interval(iv.lo, th, iv.lo_closed, True)
        else:
            left_iv = iv
        if th >= iv.lo:
            right_iv = Interval(th, iv.hi, False, iv.hi_closed)
        else:
            right_iv = iv
        walk(node.left, box[:d] + (left_iv,) + box[d + 1:])
        walk(node.right, box[:d] + (right_iv,) + box[d + 1:])

    walk(tree, tuple(domain))
    return out


def full_domain(n_features: int, lower=None, upper=None) -> Box:
    if lower is None:
        return tuple(Interval() for _ in range(n_features))
    return tuple(Interval(float(lo), float(hi), True, True) for lo, hi in zip(lower, upper))


def tree_depth(node: Node) -> int:
    return 0 if isinstance(node, Leaf) else 1 + max(tree_depth(node.left), tree_depth(node.right))


def tree_from_dict(d: dict, n_features: int) -> Node:
    if not isinstance(d, dict):
        raise ModelFormatError(f"tree node must be an object, got {type(d).__name__}")
    if "leaf" in d:
        label = d["leaf"]
        if label not in (-1, 1):
            raise ModelFormatError(f"leaf label must be -1 or +1, got {label!r}")
        return Leaf(int(label))
    missing = {"feature", "threshold", "left", "right"} - d.keys()
    if missing:
        raise ModelFormatError(f"split node missing {sorted(missing)} (nodes must be binary)")
    f = d["feature"]
    if not isinstance(f, int) or not 0 <= f < n_features:
        raise ModelFormatError(f"split feature index {f!r} out of range [0, {n_features})")
    return Split(f, float(d["threshold"]),
                 tree_from_dict(d["left"], n_features), tree_from_dict(d["right"], n_features))


def tree_to_dict(node: Node) -> dict:
    if isinstance(node, Leaf):
        return {"leaf": node.label}
    return {"feature": node.feature, "threshold": node.threshold,
            "left": tree_to_dict(node.left), "right": tree_to_dict(node.right)}


# -- classifiers ---------------------------------------------------------------

class AdditiveClassifier:
    weights: np.ndarray
    intercept: float
    n_features: int

    @property
    def n_learners(self) -> int:
        return self.weights.size

    def base_learner_values(self, x) -> np.ndarray:
        raise NotImplementedError

    def _check(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape != (self.n_features,):
            raise ValueError(f"expected {self.n_features} features, got shape {x.shape}")
        return x

    def score(self, x) -> float:
        return float(self.weights @ self.base_learner_values(x) - self.intercept)

    def predict(self, x) -> int:
        return 1 if self.score(x) >= 0 else -1

    def to_dict(self) -> dict:
        raise NotImplementedError


@dataclass(frozen=True, eq=False)
class LinearModel(AdditiveClassifier):
    weights: np.ndarray
    intercept: float

    def __post_init__(self):
        object.__setattr__(self, "weights", np.asarray(self.weights, dtype=float))
        if self.weights.ndim != 1 or self.weights.size == 0:
            raise ModelFormatError("linear model needs a non-empty weight vector")

    @property
    def n_features(self) -> int:
        return self.weights.size

    def base_learner_values(self, x) -> np.ndarray:
        return self._check(x).copy()

    def to_dict(self) -> dict:
        return {"version": MODEL_FORMAT_VERSION, "type": "linear",
                "weights": self.weights.tolist(), "intercept": self.intercept}


@dataclass(frozen=True, eq=False)
class TreeEnsemble(AdditiveClassifier):
    trees: tuple[Node, ...]
    weights: np.ndarray
    intercept: float
    n_features: int
    regions: tuple[tuple[tuple[Box, int], ...], ...] = field(default=(), repr=False)

    def __post_init__(self):
        object.__setattr__(self, "weights", np.asarray(self.weights, dtype=float))
        if len(self.trees) == 0 or len(self.trees) != self.weights.size:
            raise ModelFormatError("tree ensemble needs one weight per tree and at least one tree")
        if not self.regions:
            dom = full_domain(self.n_features)
            object.__setattr__(self, "regions",
                               tuple(tuple(extract_leaf_regions(t, dom)) for t in self.trees))

    def base_learner_values(self, x) -> np.ndarray:
        x = self._check(x)
        return np.array([float(traverse(t, x)) for t in self.trees])

    def base_learner_values_by_box(self, x) -> np.ndarray:
        x = self._check(x)
        out = []
        for regs in self.regions:
            out.append(float(sum(label for box, label in regs if box_contains(box, x))))
        return np.array(out)

    def to_dict(self) -> dict:
        return {"version": MODEL_FORMAT_VERSION, "type": "forest", "n_features": self.n_features,
                "weights": self.weights.tolist(), "intercept": self.intercept,
                "trees": [tree_to_dict(t) for t in self.trees]}


@dataclass(frozen=True, eq=False)
class ReluNetwork(AdditiveClassifier):
    hidden_weights: np.ndarray  # (T, D)
    hidden_bias: np.ndarray  # (T,)
    weights: np.ndarray  # (T,)
    intercept: float

    def __post_init__(self):
        for name in ("hidden_weights", "hidden_bias", "weights"):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=float))
        W = self.hidden_weights
        if W.ndim != 2 or W.shape[0] == 0:
            raise ModelFormatError("hidden weight matrix must be (T, D) with T >= 1")
        if self.hidden_bias.shape != (W.shape[0],) or self.weights.shape != (W.shape[0],):
            raise ModelFormatError("hidden bias and output weights must have one entry per neuron")

    @property
    def n_features(self) -> int:
        return self.hidden_weights.shape[1]

    def pre_activations(self, x) -> np.ndarray:
        return self.hidden_weights @ self._check(x) + self.hidden_bias

    def base_learner_values(self, x) -> np.ndarray:
        return np.maximum(0.0, self.pre_activations(x))

    def to_dict(self) -> dict:
        return {"version": MODEL_FORMAT_VERSION, "type": "mlp",
                "layers": [{"weights": self.hidden_weights.tolist(), "bias": self.hidden_bias.tolist()}],
                "weights": self.weights.tolist(), "intercept": self.intercept}


# -- model files -------------------------------------------------------------

def model_from_dict(doc: dict) -> AdditiveClassifier:
    if not isinstance(doc, dict):
        raise ModelFormatError("model document must be an object")
    if doc.get("version") != MODEL_FORMAT_VERSION:
        raise ModelFormatError(f"unsupported or missing model version {doc.get('version')!r}")
    kind = doc.get("type")
    try:
        intercept = float(doc["intercept"])
        weights = np.asarray(doc["weights"], dtype=float)
    except (KeyError, TypeError, ValueError) as exc:
        raise ModelFormatError(f"model needs numeric 'weights' and 'intercept': {exc}") from None
    if weights.ndim != 1:
        raise ModelFormatError("'weights' must be a flat list")

    if kind == "linear":
        return LinearModel(weights, intercept)
    if kind == "forest":
        n = doc.get("n_features")
        if not isinstance(n, int) or n < 1:
            raise ModelFormatError("forest model needs a positive integer 'n_features'")
        trees = tuple(tree_from_dict(t, n) for t in doc.get("trees", []))
        if len(trees) != weights.size:
            raise ModelFormatError(f"{len(trees)} trees but {weights.size} tree weights")
        return TreeEnsemble(trees, weights, intercept, n)
    if kind == "mlp":
        layers = doc.get("layers")
        if not isinstance(layers, list) or len(layers) != 1:
            raise ModelFormatError("mlp model needs exactly one hidden layer in 'layers'")
        rows = layers[0].get("weights")
        if not rows or len({len(r) for r in rows}) != 1:
            raise ModelFormatError("hidden weight vectors must all have the same length")
        if "n_features" in doc and len(rows[0]) != doc["n_features"]:
            raise ModelFormatError(f"hidden weight length {len(rows[0])} != n_features {doc['n_features']}")
        W = np.asarray(rows, dtype=float)
        bias = np.asarray(layers[0].get("bias", []), dtype=float)
        if bias.shape != (W.shape[0],) or weights.shape != (W.shape[0],):
            raise ModelFormatError("hidden bias and output weights must have one entry per neuron")
        return ReluNetwork(W, bias, weights, intercept)
    raise ModelFormatError(f"unknown model type {kind!r}")


def load_model(source) -> AdditiveClassifier:
    """Read a model from a path, a JSON string, or an already-parsed dict."""
    if isinstance(source, dict):
        return model_from_dict(source)
    if isinstance(source, os.PathLike) or (isinstance(source, str) and not source.lstrip().startswith("{")):
        with open(source, encoding="utf-8") as fh:
            doc = json.load(fh)
    else:
        try:
            doc = json.loads(source)
        except json.JSONDecodeError as exc:
            raise ModelFormatError(f"invalid JSON: {exc}") from None
    return model_from_dict(doc)


def save_model(clf: AdditiveClassifier, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(clf.to_dict(), fh, indent=2)
        fh.write("\n")
