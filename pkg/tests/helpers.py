"""Small problem builders shared by several test modules."""

import numpy as np

from ordce.classifiers import LinearModel
from ordce.cost_model import DistanceCost
from ordce.feature_space import ActionSet
from ordce.formulation import OrdceProblem

from conftest import DEMO_M


def table_problem(clf, x, lists, costs, M, scale=None, gamma=1.0, K=None, groups=()):
    """Problem with explicit candidate lists and matching per-candidate costs (0 first)."""
    cand = tuple(np.array([0.0, *c], dtype=float) for c in lists)
    cost = tuple(np.array([0.0, *c], dtype=float) for c in costs)
    D = len(lists)
    return OrdceProblem(clf, np.asarray(x, float), ActionSet(cand), M, DistanceCost(cand, cost, "table"),
                        np.ones(D) if scale is None else scale, gamma, K or D, groups)


def example_two_problem(c2, c3, gamma):
    """Income must reach 6; JobSkill +1 first carries +6 into Income."""
    clf = LinearModel([0, 0, 1, 0, 0], 6.0)
    return table_problem(clf, np.zeros(5), [[], [1.0], [6.0], [], []], [[], [c2], [c3], [], []],
                         DEMO_M, gamma=gamma, K=2)
