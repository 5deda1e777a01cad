import itertools
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ordce.cost_model import (DistanceCost, OrderedAction, actual_perturbations, default_scaling, mad_cost,
                              ordering_cost, table_cost, tlps_cost, total_cost)
from ordce.feature_space import ActionSet, DatasetStats

from conftest import DEMO_M

A1 = np.array([0, 0, 4, 1, 3], dtype=float)


def frac_deltas(a, sigma, M):
    """Exact rational recursion, independent of the float implementation."""
    out = []
    for k, d in enumerate(sigma):
        out.append(Fraction(a[d]) - sum(Fraction(M[sigma[l], d]) * out[l] for l in range(k)))
    return out


class TestOrderingCost:
    def test_example_one_deltas(self):
        assert actual_perturbations(A1, (3, 2, 4), DEMO_M).tolist() == [1.0, 0.0, 3.5]
        assert actual_perturbations(A1, (4, 3, 2), DEMO_M).tolist() == [3.0, 1.0, 0.0]
        assert frac_deltas(A1, (3, 2, 4), DEMO_M) == [1, 0, Fraction(7, 2)]

    def test_example_one_costs(self):
        assert ordering_cost(A1, (3, 2, 4), DEMO_M) == 4.5
        assert ordering_cost(A1, (4, 3, 2), DEMO_M) == 4.0

    def test_identity_interaction(self):
        assert actual_perturbations(A1, (4, 2, 3), np.eye(5)).tolist() == [3.0, 4.0, 1.0]

    def test_empty_support(self):
        assert ordering_cost(np.zeros(5), (), DEMO_M) == 0.0

    def test_order_must_match_support(self):
        with pytest.raises(ValueError):
            ordering_cost(A1, (3, 2), DEMO_M)


@settings(max_examples=100, deadline=None)
@given(st.lists(st.integers(-5, 5), min_size=1, max_size=5), st.randoms(use_true_random=False))
def test_order_invariance_without_interaction(a, rnd):
    a = np.array(a, dtype=float)
    s = np.array([rnd.uniform(0.1, 3) for _ in a])
    supp = [d for d in range(a.size) if a[d] != 0]
    expected = math.fsum(s[d] * abs(a[d]) for d in supp)
    for sigma in itertools.permutations(supp):
        assert math.isclose(ordering_cost(a, sigma, np.eye(a.size), s), expected, rel_tol=1e-12)


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 10_000))
def test_recursion_reconstructs_action(seed):
    rng = np.random.default_rng(seed)
    D = int(rng.integers(1, 7))
    M = np.eye(D) + np.where(rng.random((D, D)) < 0.5, rng.integers(-3, 4, (D, D)), 0) * (1 - np.eye(D))
    a = rng.integers(-4, 5, D).astype(float)
    sigma = [int(d) for d in rng.permutation(D) if a[d] != 0]
    deltas = actual_perturbations(a, sigma, M)
    assert [Fraction(v) for v in deltas] == frac_deltas(a, sigma, M)
    rebuilt = np.zeros(D)
    for k, d in enumerate(sigma):
        rebuilt[d] = deltas[k] + sum(M[sigma[l], d] * deltas[l] for l in range(k))
    assert np.array_equal(rebuilt, a)


def example_two_costs(c2, c3, gamma):
    cand = (np.zeros(1), np.array([0.0, 1.0]), np.array([0.0, 6.0]), np.zeros(1), np.zeros(1))
    dist = DistanceCost(cand, (np.zeros(1), np.array([0, c2]), np.array([0, c3]), np.zeros(1), np.zeros(1)), "table")
    s = np.ones(5)
    plain = total_cost(np.array([0, 0, 6, 0, 0.0]), (2,), dist, DEMO_M, s, gamma).total
    ordered = total_cost(np.array([0, 1, 6, 0, 0.0]), (1, 2), dist, DEMO_M, s, gamma).total
    return plain, ordered


@pytest.mark.parametrize("c2,c3", [(1.0, 2.0), (0.3, 1.0), (2.5, 0.1)])
def test_example_two_threshold(c2, c3):
    threshold = c2 / 5
    for g in np.linspace(0, 3 * threshold, 31):
        plain, ordered = example_two_costs(c2, c3, g)
        assert math.isclose(plain, c3 + 6 * g) and math.isclose(ordered, c2 + c3 + g)
        if g < threshold - 1e-9:
            assert plain < ordered
        elif g > threshold + 1e-9:
            assert ordered < plain
    plain, ordered = example_two_costs(c2, c3, threshold)
    assert abs(plain - ordered) <= 1e-9


class TestDistanceCosts:
    def stats(self):
        return DatasetStats.from_matrix(np.arange(101, dtype=float)[:, None])

    def test_tlps_formula(self):
        A = ActionSet((np.array([0.0, 40.0]),))
        c = tlps_cost(A, [50.0], self.stats())
        assert math.isclose(c.costs[0][1], math.log(5))

    def test_tlps_clipping(self):
        A = ActionSet((np.array([0.0, 50.0, -50.0]),))
        c = tlps_cost(A, [50.0], self.stats())
        assert math.isclose(c.costs[0][1], abs(math.log(0.01 / 0.5)))
        assert np.all(np.isfinite(c.costs[0]))

    def test_mad(self):
        stats = DatasetStats.from_matrix(np.array([[1.0], [2], [3], [4], [100]]))
        c = mad_cost(ActionSet((np.array([0.0, 2.0]),)), stats)
        assert c.costs[0].tolist() == [0.0, 2.0]

    def test_mad_falls_back_to_std(self):
        X = np.array([[0.0], [0], [0], [0], [0], [0], [10], [-10]])
        stats = DatasetStats.from_matrix(X)
        assert stats.mad[0] == 0
        c = mad_cost(ActionSet((np.array([0.0, 4.0]),)), stats)
        assert math.isclose(c.costs[0][1], 4 / X.std())

    def test_null_candidate_free(self):
        rng = np.random.default_rng(0)
        X = rng.normal(size=(40, 3))
        stats = DatasetStats.from_matrix(X)
        A = ActionSet.from_lists([[-1, 1], [0.5], [-0.2, 0.3]])
        for c in (tlps_cost(A, X[0], stats), mad_cost(A, stats)):
            assert all(costs[0] == 0 for costs in c.costs)

    def test_table(self):
        A = ActionSet.from_lists([[1, 2], [-1]])
        c = table_cost(A, ["a", "b"], {"default": 5, "features": {"a": {"1": 0.5, "2.0": 1.5}}})
        assert c.costs[0].tolist() == [0, 0.5, 1.5] and c.costs[1].tolist() == [0, 5]
        with pytest.raises(ValueError, match="no entry"):
            table_cost(A, ["a", "b"], {"features": {"a": {"1": 0.5, "2": 1.5}}})


def test_default_scaling():
    stats = DatasetStats.from_matrix(np.array([[0.0, 0.0, 3.0], [4.0, 8.0, 3.0]]))
    assert default_scaling(stats).tolist() == [0.5, 0.25, 1.0]


def test_total_cost_gamma_zero_and_null():
    cand = (np.array([0.0, 1.0]),)
    dist = DistanceCost(cand, (np.array([0.0, 2.0]),), "table")
    assert total_cost(np.array([1.0]), (0,), dist, np.eye(1), np.ones(1), 0.0).total == 2.0
    br = total_cost(np.zeros(1), (), dist, np.eye(1), np.ones(1), 1.0)
    assert (br.dist, br.ord, br.total) == (0.0, 0.0, 0.0)
    with pytest.raises(ValueError):
        total_cost(np.zeros(1), (), dist, np.eye(1), np.ones(1), -1.0)


def test_ordered_action_document():
    cand = tuple(np.array([0.0, v]) for v in A1)
    costs = tuple(np.array([0.0, 1.0]) for _ in A1)
    act = OrderedAction.build(A1, (4, 3, 2), DistanceCost(cand, costs, "table"), DEMO_M, np.ones(5), 1.0)
    doc = act.to_dict(["a", "b", "c", "d", "e"])
    assert doc["order"] == ["e", "d", "c"] and doc["deltas"] == [3.0, 1.0, 0.0]
    assert doc["cost_total"] == 3.0 + 4.0
