"""Seeded data and problem generators: the demo credit dataset and random test instances."""

from __future__ import annotations

import numpy as np

from .classifiers import Leaf, LinearModel, ReluNetwork, Split, TreeEnsemble
from .cost_model import DistanceCost, default_scaling, mad_cost, tlps_cost
from .feature_space import ActionSet, DatasetStats, FeatureSpec, build_action_set
from .formulation import OrdceProblem, SolverParams
from .interaction import compute_interaction_matrix

DEMO_FEATURES = ("Education", "JobSkill", "Income", "WorkPerDay", "HealthStatus")
DEMO_EDGES = (("Education", "JobSkill", 1.0), ("JobSkill", "Income", 6.0),
              ("WorkPerDay", "Income", 4.0), ("WorkPerDay", "HealthStatus", -0.5))


def demo_adjacency() -> np.ndarray:
    idx = {n: i for i, n in enumerate(DEMO_FEATURES)}
    B = np.zeros((5, 5))
    for u, v, w in DEMO_EDGES:
        B[idx[u], idx[v]] = w
    return B


def sample_sem(B, n: int, rng: np.random.Generator, noise: str = "uniform") -> np.ndarray:
    """Draw ``n`` rows of ``x_j = sum_i B[i, j] x_i + e_j``, i.e. ``x = e @ M``."""
    M = compute_interaction_matrix(B)
    D = M.shape[0]
    if noise == "uniform":
        E = rng.uniform(-1.0, 1.0, size=(n, D))
    elif noise == "normal":
        E = rng.normal(size=(n, D))
    else:
        raise ValueError(f"unknown noise {noise!r}")
    return E @ M


def demo_dataset(n: int = 1000, seed: int = 0) -> tuple[np.ndarray, np.ndarray]:
    """Synthetic credit data over the demo DAG; label +1 iff z(Income) + z(HealthStatus) > 0."""
    if n < 1:
        raise ValueError("need at least one sample")
    rng = np.random.default_rng(seed)
    X = np.round(sample_sem(demo_adjacency(), n, rng), 6)
    z = (X - X.mean(axis=0)) / np.where(X.std(axis=0) > 0, X.std(axis=0), 1.0)
    y = np.where(z[:, 2] + z[:, 4] > 0, 1, -1)
    return X, y


def train_logistic(X, y, epochs: int = 2000, lr: float = 0.5, l2: float = 1e-3) -> LinearModel:
    """Full-batch gradient descent on the logistic loss over standardized inputs.

    The fitted weights are mapped back to raw feature units, so the returned
    model predicts ``+1`` iff ``w @ x >= intercept``.
    """
    X = np.asarray(X, dtype=float)
    t = (np.asarray(y) > 0).astype(float)
    mu = X.mean(axis=0)
    sd = np.where(X.std(axis=0) > 0, X.std(axis=0), 1.0)
    Z = (X - mu) / sd
    w = np.zeros(X.shape[1])
    c = 0.0
    for _ in range(epochs):
        p = 1.0 / (1.0 + np.exp(-(Z @ w + c)))
        g = p - t
        w -= lr * (Z.T @ g / len(t) + l2 * w)
        c -= lr * g.mean()
    w_raw = w / sd
    return LinearModel(np.round(w_raw, 6), float(np.round(w_raw @ mu - c, 6)))


def demo_specs(X, grid_size: int = 9) -> list[FeatureSpec]:
    lo = np.floor(X.min(axis=0) * 10) / 10
    hi = np.ceil(X.max(axis=0) * 10) / 10
    return [FeatureSpec(n, "continuous", float(lo[d]), float(hi[d]), "free", grid_size)
            for d, n in enumerate(DEMO_FEATURES)]


def build_problem(clf, x, specs, stats: DatasetStats, M, cost: str = "tlps", gamma: float = 1.0,
                  K: int = 4, scale=None, solver: SolverParams = SolverParams(),
                  table: DistanceCost | None = None) -> OrdceProblem:
    action_set = build_action_set(x, specs, stats)
    if cost == "tlps":
        dist = tlps_cost(action_set, x, stats)
    elif cost == "mad":
        dist = mad_cost(action_set, stats)
    elif cost == "table" and table is not None:
        dist = table
    else:
        raise ValueError(f"unknown cost {cost!r}")
    s = default_scaling(stats) if scale is None else np.asarray(scale, dtype=float)
    return OrdceProblem(clf, x, action_set, M, dist, s, gamma, min(K, len(specs)), solver=solver)


def demo_problems(count: int = 50, seed: int = 0, n_samples: int = 1000, gamma: float = 1.0,
                  K: int = 4, cost: str = "tlps", solver: SolverParams = SolverParams()) -> list[OrdceProblem]:
    """The first ``count`` negatively classified demo rows, each as a problem."""
    X, y = demo_dataset(n_samples, seed)
    clf = train_logistic(X, y)
    specs = demo_specs(X)
    stats = DatasetStats.from_matrix(X)
    M = compute_interaction_matrix(demo_adjacency())
    out = []
    for x in X:
        if len(out) == count:
            break
        if clf.predict(x) == -1:
            out.append(build_problem(clf, x, specs, stats, M, cost, gamma, K, solver=solver))
    return out


def random_dag(rng: np.random.Generator, D: int, density: float = 0.4) -> np.ndarray:
    """Random weighted DAG over a random topological order."""
    B = np.zeros((D, D))
    perm = rng.permutation(D)
    for a in range(D):
        for b in range(a + 1, D):
            if rng.random() < density:
                B[perm[a], perm[b]] = np.round(rng.uniform(-2, 2), 2)
    return B


def random_problem(rng: np.random.Generator, kind: str, max_D: int = 6, max_I: int = 4,
                   max_K: int = 3, gamma: float | None = None) -> OrdceProblem:
    """Small random problem with a table cost, for checks against the brute-force oracle.

    ``kind`` is ``"lm"``, ``"te"`` (two depth-2 trees) or ``"mlp"`` (three
    hidden units). Draws are repeated until the instance is classified -1.
    """
    while True:
        D = int(rng.integers(2, max_D + 1))
        x = np.round(rng.uniform(-1, 1, D), 2)
        cands = []
        for _ in range(D):
            size = int(rng.integers(2, max_I + 1))
            v = np.unique(np.round(rng.uniform(-2, 2, size - 1), 1))
            cands.append(np.concatenate([[0.0], v[v != 0]]))
        action_set = ActionSet(tuple(cands))
        costs = tuple(np.concatenate([[0.0], np.round(rng.uniform(0.1, 2, c.size - 1), 2)]) for c in cands)
        dist = DistanceCost(action_set.candidates, costs, "table")
        if kind == "lm":
            w = np.round(rng.normal(size=D), 2)
            clf = LinearModel(w, float(w @ x) + rng.uniform(0.1, 1.5))
        elif kind == "te":
            trees = []
            for _ in range(2):
                f = rng.integers(D, size=3)
                th = np.round(rng.uniform(-1.5, 1.5, 3), 2)
                lab = rng.choice([-1, 1], 4)
                trees.append(Split(int(f[0]), float(th[0]),
                                   Split(int(f[1]), float(th[1]), Leaf(int(lab[0])), Leaf(int(lab[1]))),
                                   Split(int(f[2]), float(th[2]), Leaf(int(lab[2])), Leaf(int(lab[3])))))
            clf = TreeEnsemble(tuple(trees), np.round(rng.uniform(0.5, 1.5, 2), 2), 0.0, D)
        elif kind == "mlp":
            W = np.round(rng.normal(size=(3, D)), 2)
            bias = np.round(rng.normal(size=3), 2)
            w = np.round(rng.normal(size=3), 2)
            clf = ReluNetwork(W, bias, w, float(w @ np.maximum(0, W @ x + bias)) + rng.uniform(0.05, 1))
        else:
            raise ValueError(f"unknown classifier kind {kind!r}")
        if clf.predict(x) != -1:
            continue
        M = compute_interaction_matrix(random_dag(rng, D))
        s = np.round(rng.uniform(0.5, 2, D), 2)
        g = float(np.round(rng.uniform(0, 2), 2)) if gamma is None else gamma
        K = int(rng.integers(1, min(max_K, D) + 1))
        return OrdceProblem(clf, x, action_set, M, dist, s, g, K)


def scale_problem(seed: int = 0, D: int = 15, grid_size: int = 8, K: int = 4, gamma: float = 1.0,
                  density: float = 0.15, n_samples: int = 500,
                  solver: SolverParams = SolverParams()) -> OrdceProblem:
    """Linear-model instance sized like the real-data experiments.

    Data come from a random Gaussian linear SEM; the model has random weights
    and an intercept at the 60th score percentile, and the explained row sits
    at the 33rd percentile. MAD distance, inverse-std scaling.
    """
    rng = np.random.default_rng(seed)
    B = random_dag(rng, D, density)
    X = sample_sem(B, n_samples, rng, noise="normal")
    stats = DatasetStats.from_matrix(X)
    specs = [FeatureSpec(f"f{d}", "continuous", float(X[:, d].min()), float(X[:, d].max()), "free", grid_size)
             for d in range(D)]
    w = rng.normal(size=D)
    scores = X @ w
    clf = LinearModel(w, float(np.quantile(scores, 0.6)))
    x = X[np.argsort(scores)[n_samples // 3]]
    return build_problem(clf, x, specs, stats, compute_interaction_matrix(B), "mad", gamma, K, solver=solver)
