"""Mixed-integer model for cost-optimal ordered actions, and its decoding.

Variable families (``k`` step, ``d`` feature, ``i`` candidate, ``t`` base learner):

``pik[k][d][i]``  candidate ``i >= 1`` of feature ``d`` is applied at step ``k``
``pi[d][i]``      candidate ``i`` of feature ``d`` is selected (``i = 0`` is the null action)
``sig[k][d]``     feature ``d`` is the one perturbed at step ``k``
``delta[k][d]``   actual perturbation of feature ``d`` at step ``k`` (0 when inactive)
``eps[k][d]``     effect on ``d`` propagated from steps before ``k``
``zeta[k]``       scaled magnitude of step ``k``
``xi[t]``         base-learner output at the perturbed instance
``phi[t][l]``     leaf ``l`` of tree ``t`` is reached (tree ensembles)
``nu[t]``, ``xibar[t]``  activation indicator and negative part (ReLU networks)

Step binaries exist only for non-null candidates. A feature's null
selection is implied by ``sum_i pi[d][i] = 1`` together with the coupling
``pi[d][i] = sum_k pik[k][d][i]``, which keeps the model feasible for every
support size up to ``K``. Empty steps are pushed to the tail.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .classifiers import AdditiveClassifier, LinearModel, ReluNetwork, TreeEnsemble, full_domain
from .cost_model import DistanceCost, OrderedAction
from .feature_space import ActionSet
from .milp.bnb import SolveResult, solve_bnb
from .milp.model import MilpModel

OBJECTIVE_TOL = 1e-5


class ProblemError(ValueError):
    pass


@dataclass(frozen=True)
class SolverParams:
    time_limit: float = 300.0
    gap_tol: float = 1e-6
    threads: int = 1


@dataclass(frozen=True, eq=False)
class OrdceProblem:
    classifier: AdditiveClassifier
    instance: np.ndarray
    action_set: ActionSet
    M: np.ndarray
    distance: DistanceCost
    scale: np.ndarray
    gamma: float = 1.0
    K: int = 4
    onehot_groups: tuple[tuple[int, ...], ...] = ()
    solver: SolverParams = field(default_factory=SolverParams)

    def __post_init__(self):
        x = np.asarray(self.instance, dtype=float)
        object.__setattr__(self, "instance", x)
        object.__setattr__(self, "M", np.asarray(self.M, dtype=float))
        object.__setattr__(self, "scale", np.asarray(self.scale, dtype=float))
        D = x.size
        if self.classifier.n_features != D or len(self.action_set) != D or self.M.shape != (D, D):
            raise ProblemError("classifier, instance, action set, and interaction matrix disagree on D")
        if self.classifier.predict(x) != -1:
            raise ProblemError("instance is already classified +1; nothing to explain")
        if not 1 <= self.K <= D:
            raise ProblemError(f"K must lie in [1, {D}], got {self.K}")
        if self.gamma < 0:
            raise ProblemError("gamma must be non-negative")
        if np.any(self.scale <= 0):
            raise ProblemError("scaling factors must be strictly positive")
        seen: set[int] = set()
        for g in self.onehot_groups:
            if seen & set(g):
                raise ProblemError("one-hot groups must be pairwise disjoint")
            seen |= set(g)

    @property
    def D(self) -> int:
        return self.instance.size

    def with_gamma(self, gamma: float) -> "OrdceProblem":
        return dataclasses.replace(self, gamma=gamma)


def compute_bounds(action_set: ActionSet, M, K: int) -> tuple[np.ndarray, np.ndarray]:
    """Per-step bounds ``L[k, d] <= delta[k][d] <= U[k, d]`` (``k`` is 0-based)."""
    M = np.asarray(M, dtype=float)
    D = len(action_set)
    L = np.zeros((K, D))
    U = np.zeros((K, D))
    L[0], U[0] = action_set.bounds()
    off = ~np.eye(D, dtype=bool)
    for k in range(K - 1):
        # effect of feature d' on d: M[d', d] * Delta for Delta in {L[k, d'], U[k, d']}
        lo_eff = M * L[k][:, None]
        hi_eff = M * U[k][:, None]
        both_max = np.where(off, np.maximum(lo_eff, hi_eff), -np.inf)
        both_min = np.where(off, np.minimum(lo_eff, hi_eff), np.inf)
        top = both_max.max(axis=0) if D > 1 else np.zeros(D)
        bottom = both_min.min(axis=0) if D > 1 else np.zeros(D)
        L[k + 1] = L[k] - top
        U[k + 1] = U[k] - bottom
    return L, U


@dataclass
class OrdceVariables:
    pik: list[list[list[int]]]
    pi: list[list[int]]
    sig: list[list[int]]
    delta: list[list[int]]
    eps: list[list[int]]
    zeta: list[int]
    xi: list[int]
    phi: list[list[int]] = field(default_factory=list)
    nu: list[int] = field(default_factory=list)
    xibar: list[int] = field(default_factory=list)
    L: np.ndarray | None = None
    U: np.ndarray | None = None


def build_milo(problem: OrdceProblem) -> tuple[MilpModel, OrdceVariables]:
    p = problem
    D, K = p.D, p.K
    cand = p.action_set.candidates
    if any(c.size == 0 for c in cand):
        raise ProblemError("empty action set")
    x = p.instance
    M, s = p.M, p.scale
    L, U = compute_bounds(p.action_set, M, K)
    m = MilpModel("ordce")

    pik = [[[m.add_binary(f"pik_{k}_{d}_{i}") for i in range(1, cand[d].size)]
            for d in range(D)] for k in range(K)]
    pi = [[m.add_binary(f"pi_{d}_{i}") for i in range(cand[d].size)] for d in range(D)]
    sig = [[m.add_binary(f"sig_{k}_{d}") for d in range(D)] for k in range(K)]
    delta = [[m.add_var(f"delta_{k}_{d}", L[k, d], U[k, d]) for d in range(D)] for k in range(K)]

    # eps[k][d] is a sum over earlier steps of one M[d', d] * delta term per step
    eps_lo = np.zeros((K, D))
    eps_hi = np.zeros((K, D))
    for k in range(1, K):
        step_lo = np.zeros(D)
        step_hi = np.zeros(D)
        for d in range(D):
            effs = [M[e, d] * v for e in range(D) if e != d for v in (L[k - 1, e], U[k - 1, e])]
            if effs:
                step_lo[d], step_hi[d] = min(min(effs), 0.0), max(max(effs), 0.0)
        eps_lo[k] = eps_lo[k - 1] + step_lo
        eps_hi[k] = eps_hi[k - 1] + step_hi
    eps = [[m.add_var(f"eps_{k}_{d}", eps_lo[k, d], eps_hi[k, d]) for d in range(D)] for k in range(K)]
    zeta = [m.add_var(f"zeta_{k}", 0.0, float(max(s[d] * max(-L[k, d], U[k, d]) for d in range(D))))
            for k in range(K)]

    for d in range(D):
        m.add_constraint({j: 1.0 for j in pi[d]}, "=", 1.0, f"select_{d}")
        for i in range(1, cand[d].size):
            row = {pi[d][i]: 1.0}
            row.update({pik[k][d][i - 1]: -1.0 for k in range(K)})
            m.add_constraint(row, "=", 0.0, f"couple_{d}_{i}")
    for k in range(K):
        for d in range(D):
            row = {sig[k][d]: 1.0}
            row.update({j: -1.0 for j in pik[k][d]})
            m.add_constraint(row, "=", 0.0, f"active_{k}_{d}")
    for d in range(D):
        m.add_constraint({sig[k][d]: 1.0 for k in range(K)}, "<=", 1.0, f"once_{d}")
    for k in range(K):
        m.add_constraint({sig[k][d]: 1.0 for d in range(D)}, "<=", 1.0, f"onefeat_{k}")
    for k in range(K - 1):
        row = {sig[k][d]: 1.0 for d in range(D)}
        row.update({sig[k + 1][d]: -1.0 for d in range(D)})
        m.add_constraint(row, ">=", 0.0, f"symbreak_{k}")

    for k in range(K):
        for d in range(D):
            chosen = {pik[k][d][i - 1]: -cand[d][i] for i in range(1, cand[d].size)}
            row = {delta[k][d]: 1.0, eps[k][d]: 1.0, **chosen}
            m.add_constraint({**row, sig[k][d]: -U[k, d]}, ">=", -U[k, d], f"dlo_{k}_{d}")
            m.add_constraint({**row, sig[k][d]: -L[k, d]}, "<=", -L[k, d], f"dhi_{k}_{d}")
            m.add_constraint({delta[k][d]: 1.0, sig[k][d]: -L[k, d]}, ">=", 0.0, f"dmin_{k}_{d}")
            m.add_constraint({delta[k][d]: 1.0, sig[k][d]: -U[k, d]}, "<=", 0.0, f"dmax_{k}_{d}")
    for k in range(K):
        for d in range(D):
            row = {eps[k][d]: 1.0}
            for l in range(k):
                for e in range(D):
                    if e != d and M[e, d] != 0.0:
                        row[delta[l][e]] = -M[e, d]
            m.add_constraint(row, "=", 0.0, f"accum_{k}_{d}")
    for k in range(K):
        row = {delta[k][d]: float(s[d]) for d in range(D)}
        m.add_constraint({**row, zeta[k]: -1.0}, "<=", 0.0, f"zpos_{k}")
        m.add_constraint({**row, zeta[k]: 1.0}, ">=", 0.0, f"zneg_{k}")

    clf = p.classifier
    v = OrdceVariables(pik, pi, sig, delta, eps, zeta, xi=[], L=L, U=U)
    if isinstance(clf, LinearModel):
        lo, hi = p.action_set.bounds()
        v.xi = [m.add_var(f"xi_{d}", x[d] + lo[d], x[d] + hi[d]) for d in range(D)]
        for d in range(D):
            row = {v.xi[d]: 1.0}
            row.update({pi[d][i]: -cand[d][i] for i in range(1, cand[d].size)})
            m.add_constraint(row, "=", x[d], f"linear_{d}")
    elif isinstance(clf, TreeEnsemble):
        _tree_rows(m, p, v)
    elif isinstance(clf, ReluNetwork):
        _relu_rows(m, p, v)
    else:
        raise ProblemError(f"unsupported classifier {type(clf).__name__}")
    m.add_constraint({j: float(w) for j, w in zip(v.xi, clf.weights)}, ">=", clf.intercept, "valid")

    for g, group in enumerate(p.onehot_groups):
        row = {}
        for d in group:
            row.update({pi[d][i]: cand[d][i] for i in range(1, cand[d].size)})
        m.add_constraint(row, "=", 1.0 - float(sum(x[d] for d in group)), f"onehot_{g}")

    obj = {}
    for k in range(K):
        for d in range(D):
            for i in range(1, cand[d].size):
                obj[pik[k][d][i - 1]] = float(p.distance.costs[d][i])
    for k in range(K):
        obj[zeta[k]] = p.gamma
    m.set_objective(obj)
    return m, v


def leaf_candidate_sets(problem: OrdceProblem, tree_index: int) -> list[list[list[int]]]:
    """``out[l][d]`` lists candidates ``i`` with ``x[d] + a[d][i]`` inside leaf ``l``'s interval on ``d``."""
    clf = problem.classifier
    cand = problem.action_set.candidates
    x = problem.instance
    out = []
    for box, _ in clf.regions[tree_index]:
        out.append([[i for i in range(cand[d].size) if box[d].contains(x[d] + cand[d][i])]
                    for d in range(problem.D)])
    return out


def _tree_rows(m: MilpModel, p: OrdceProblem, v: OrdceVariables) -> None:
    clf: TreeEnsemble = p.classifier
    D = p.D
    for t, regions in enumerate(clf.regions):
        sets = leaf_candidate_sets(p, t)
        phis = [m.add_binary(f"phi_{t}_{l}") for l in range(len(regions))]
        v.phi.append(phis)
        m.add_constraint({j: 1.0 for j in phis}, "=", 1.0, f"leaf_{t}")
        for l, phi in enumerate(phis):
            row = {phi: float(D)}
            for d in range(D):
                for i in sets[l][d]:
                    row[v.pi[d][i]] = row.get(v.pi[d][i], 0.0) - 1.0
            m.add_constraint(row, "<=", 0.0, f"logic_{t}_{l}")
        xi = m.add_var(f"xi_{t}", -1.0, 1.0)
        v.xi.append(xi)
        row = {xi: 1.0}
        row.update({phi: -float(label) for phi, (_, label) in zip(phis, regions)})
        m.add_constraint(row, "=", 0.0, f"tree_{t}")


def relu_constants(problem: OrdceProblem) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """``F`` (pre-activation at the instance), ``H`` and ``Hbar`` (box bounds over the grid)."""
    clf: ReluNetwork = problem.classifier
    W = clf.hidden_weights
    F = W @ problem.instance + clf.hidden_bias
    hi = np.zeros_like(F)
    lo = np.zeros_like(F)
    for d, c in enumerate(problem.action_set.candidates):
        eff = np.outer(W[:, d], c)
        hi += eff.max(axis=1)
        lo += eff.min(axis=1)
    return F, F + hi, -(F + lo)


def _relu_rows(m: MilpModel, p: OrdceProblem, v: OrdceVariables) -> None:
    clf: ReluNetwork = p.classifier
    F, H, Hbar = relu_constants(p)
    cand = p.action_set.candidates
    for t in range(clf.n_learners):
        h, hb = max(float(H[t]), 0.0), max(float(Hbar[t]), 0.0)
        xi = m.add_var(f"xi_{t}", 0.0, h)
        xib = m.add_var(f"xibar_{t}", 0.0, hb)
        nu = m.add_binary(f"nu_{t}")
        v.xi.append(xi)
        v.xibar.append(xib)
        v.nu.append(nu)
        m.add_constraint({xi: 1.0, nu: -h}, "<=", 0.0, f"relu_on_{t}")
        m.add_constraint({xib: 1.0, nu: hb}, "<=", hb, f"relu_off_{t}")
        row = {xi: 1.0, xib: -1.0}
        for d in range(p.D):
            w = clf.hidden_weights[t, d]
            if w != 0.0:
                for i in range(1, cand[d].size):
                    row[v.pi[d][i]] = row.get(v.pi[d][i], 0.0) - w * cand[d][i]
        m.add_constraint(row, "=", float(F[t]), f"relu_{t}")


# -- extraction ----------------------------------------------------------------

@dataclass
class Extraction:
    status: str  # optimal | time_limit_with_incumbent | infeasible | timeout
    action: OrderedAction | None
    solver: SolveResult | None = None
    method: str = "ordce"

    @property
    def ok(self) -> bool:
        return self.action is not None

    def to_dict(self, feature_names: Sequence[str] | None = None, include_time: bool = True) -> dict:
        """JSON-ready result; ``include_time=False`` drops the only non-reproducible field."""
        doc = {"method": self.method, "status": self.status}
        if self.action is not None:
            doc.update(self.action.to_dict(feature_names))
        if self.solver is not None:
            doc["solver"] = {"status": self.solver.status, "nodes": self.solver.nodes,
                             "objective": _finite_or_none(self.solver.objective),
                             "best_bound": _finite_or_none(self.solver.best_bound)}
            if include_time:
                doc["solver"]["time"] = round(self.solver.wall_time, 6)
        return doc


def _finite_or_none(v: float):
    return float(v) if math.isfinite(v) else None


def decode(problem: OrdceProblem, v: OrdceVariables, x: np.ndarray) -> tuple[np.ndarray, tuple[int, ...]]:
    cand = problem.action_set.candidates
    a = np.zeros(problem.D)
    order = []
    for k in range(problem.K):
        active = [d for d in range(problem.D) if x[v.sig[k][d]] > 0.5]
        if active:
            order.append(active[0])
        for d in range(problem.D):
            for i in range(1, cand[d].size):
                if x[v.pik[k][d][i - 1]] > 0.5:
                    a[d] = cand[d][i]
    return a, tuple(order)


def extract(problem: OrdceProblem) -> Extraction:
    model, v = build_milo(problem)
    sp = problem.solver
    res = solve_bnb(model, time_limit=sp.time_limit, gap_tol=sp.gap_tol, threads=sp.threads)
    if res.status == "infeasible":
        return Extraction("infeasible", None, res)
    if res.x is None:
        return Extraction("timeout", None, res)
    a, order = decode(problem, v, res.x)
    action = OrderedAction.build(a, order, problem.distance, problem.M, problem.scale, problem.gamma)
    if problem.classifier.predict(problem.instance + a) != 1:
        raise RuntimeError(f"decoded action {a} does not flip the prediction")
    if abs(action.cost_total - res.objective) > OBJECTIVE_TOL * max(1.0, abs(res.objective)):
        raise RuntimeError(f"recomputed cost {action.cost_total} disagrees with solver objective {res.objective}")
    return Extraction(res.status, action, res)


def sweep_gamma(problem: OrdceProblem, gammas: Sequence[float]) -> list[tuple[float, Extraction]]:
    gammas = [float(g) for g in gammas]
    if any(g < 0 for g in gammas) or gammas != sorted(gammas):
        raise ProblemError("gamma values must be non-negative and ascending")
    out = []
    for g in gammas:
        try:
            out.append((g, extract(problem.with_gamma(g))))
        except RuntimeError as exc:
            out.append((g, Extraction(f"error: {exc}", None)))
    return out
