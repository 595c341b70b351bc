import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from aquafront.nsga2 import (
    Individual,
    OperatorParams,
    Population,
    crowding_distance,
    dominates,
    environmental_selection,
    fast_nondominated_sort,
    make_children,
    polynomial_delta,
    polynomial_mutation,
    sbx_crossover,
    tournament,
)
from aquafront.objectives import Evaluation


def ev(c, r, feasible=True, deficit=0.0):
    return Evaluation(c, r, feasible, deficit if not feasible else 0.0)


def pop_of(evals):
    return Population(np.zeros((len(evals), 2)), evals)


class FixedRng:
    """Stands in for a Generator: successive ``random`` calls return the
    given values in turn (the last one repeats)."""

    def __init__(self, *values):
        self.values = list(values)

    def random(self, size=None):
        v = self.values.pop(0) if len(self.values) > 1 else self.values[0]
        return np.full(size, v) if size is not None else v


def brute_fronts(evals):
    left = list(range(len(evals)))
    fronts = []
    while left:
        front = [i for i in left if not any(dominates(evals[j], evals[i]) for j in left if j != i)]
        fronts.append(sorted(front))
        left = [i for i in left if i not in front]
    return fronts


def random_evals(rng, n):
    out = []
    for _ in range(n):
        c = float(rng.integers(0, 8))
        r = float(rng.integers(0, 8)) / 8
        if rng.random() < 0.2:
            out.append(ev(c, -math.inf, False, float(rng.integers(1, 4))))
        else:
            out.append(ev(c, r))
    return out


class TestDominance:
    def test_better_in_both(self):
        assert dominates(ev(5, 0.5), ev(6, 0.4))
        assert not dominates(ev(6, 0.4), ev(5, 0.5))

    def test_tradeoff(self):
        assert not dominates(ev(5, 0.5), ev(4, 0.4))
        assert not dominates(ev(4, 0.4), ev(5, 0.5))

    def test_cheaper_and_more_resilient(self):
        assert dominates(ev(4, 0.6), ev(5, 0.5))

    def test_feasible_first(self):
        assert dominates(ev(1e9, 0.0), ev(1, -math.inf, False, 1e-9))
        assert not dominates(ev(1, -math.inf, False, 1e-9), ev(1e9, 0.0))

    def test_smaller_deficit_wins(self):
        assert dominates(ev(9, 0, False, 1.0), ev(1, 0, False, 2.0))

    def test_equal_vectors(self):
        assert not dominates(ev(1, 1), ev(1, 1))


class TestSort:
    def test_single_front(self):
        assert fast_nondominated_sort(pop_of([ev(1, 0.1), ev(2, 0.2), ev(3, 0.3)])) == [[0, 1, 2]]

    def test_chain(self):
        fronts = fast_nondominated_sort(pop_of([ev(3, 0.1), ev(2, 0.2), ev(1, 0.3)]))
        assert fronts == [[2], [1], [0]]

    def test_random_vs_pairwise(self):
        rng = np.random.default_rng(12)
        evals = random_evals(rng, 12)
        assert [sorted(f) for f in fast_nondominated_sort(pop_of(evals))] == brute_fronts(evals)

    def test_individual_ranks(self):
        inds = [Individual(np.zeros(1), e) for e in (ev(3, 0.1), ev(1, 0.3))]
        fast_nondominated_sort(inds)
        assert [i.rank for i in inds] == [1, 0]


class TestCrowding:
    def test_equally_spaced(self):
        front = [Individual(np.zeros(1), ev(c, c)) for c in (0.0, 1.0, 2.0)]
        d = crowding_distance(front)
        assert d[1] == pytest.approx(2.0)
        assert math.isinf(d[0]) and math.isinf(d[2])

    def test_two_points(self):
        front = [Individual(np.zeros(1), ev(c, c)) for c in (0.0, 1.0)]
        assert all(math.isinf(x) for x in crowding_distance(front))

    def test_duplicates_add_nothing(self):
        front = [Individual(np.zeros(1), ev(c, r)) for c, r in ((0, 0), (1, 1), (1, 1), (2, 2))]
        d = crowding_distance(front)
        # each duplicate only sees the half of its interval on the far side
        assert d[1:3] == pytest.approx([1.0, 1.0])


class TestSbx:
    P = OperatorParams(p_c=1.0, eta_c=15)

    def test_identical_parents(self):
        rng = np.random.default_rng(0)
        p = np.array([1.3, 2.0, 0.0])
        c1, c2 = sbx_crossover(p, p.copy(), self.P, rng, np.full(3, 5.0))
        np.testing.assert_array_equal(c1, p)
        np.testing.assert_array_equal(c2, p)

    @pytest.mark.parametrize("u", [0.5, 0.25, 0.8])
    def test_direct_formula(self, u):
        p1, p2 = np.array([1.0, 2.0]), np.array([3.0, 2.5])
        c1, c2 = sbx_crossover(p1, p2, self.P, FixedRng(0.0, 0.0, u))
        if u <= 0.5:
            beta = (2 * u) ** (1 / 16)
        else:
            beta = (1 / (2 * (1 - u))) ** (1 / 16)
        np.testing.assert_allclose(c1, 0.5 * ((1 + beta) * p1 + (1 - beta) * p2), rtol=1e-15)
        np.testing.assert_allclose(c2, 0.5 * ((1 - beta) * p1 + (1 + beta) * p2), rtol=1e-15)

    def test_no_crossover_copies(self):
        p1, p2 = np.array([1.0, 2.0]), np.array([3.0, 2.5])
        c1, c2 = sbx_crossover(p1, p2, OperatorParams(p_c=0.0), np.random.default_rng(1))
        np.testing.assert_array_equal(c1, p1)
        np.testing.assert_array_equal(c2, p2)

    @settings(max_examples=200, deadline=None)
    @given(st.integers(0, 2**32 - 1), st.integers(1, 6))
    def test_midpoint_and_bounds(self, seed, n):
        rng = np.random.default_rng(seed)
        upper = rng.integers(1, 10, n).astype(float)
        p1, p2 = rng.random(n) * upper, rng.random(n) * upper
        c1, c2 = sbx_crossover(p1, p2, self.P, rng)
        np.testing.assert_allclose(c1 + c2, p1 + p2, atol=1e-12)
        c1, c2 = sbx_crossover(p1, p2, self.P, rng, upper)
        assert np.all((c1 >= 0) & (c1 <= upper) & (c2 >= 0) & (c2 <= upper))


class TestMutation:
    def test_zero_rate_identity(self):
        x = np.array([0.3, 4.2, 7.0])
        y = polynomial_mutation(x, OperatorParams(p_m=0.0), np.random.default_rng(0), np.full(3, 7.0))
        np.testing.assert_array_equal(x, y)

    def test_midpoint_draw_no_move(self):
        x = np.array([0.3, 4.2, 7.0])
        y = polynomial_mutation(x, OperatorParams(p_m=1.0), FixedRng(0.5), np.full(3, 7.0))
        np.testing.assert_array_equal(x, y)
        assert polynomial_delta(0.5, 2.0, 7.0, 7.0) == 0.0

    def test_direct_formula_low_branch(self):
        u, y, ub, eta = 0.2, 2.0, 7.0, 7.0
        d1 = y / ub
        expected = ((2 * u + (1 - 2 * u) * (1 - d1) ** (eta + 1)) ** (1 / (eta + 1)) - 1) * ub
        assert polynomial_delta(u, y, ub, eta) == pytest.approx(expected, rel=1e-14)

    def test_direct_formula_high_branch(self):
        u, y, ub, eta = 0.9, 2.0, 7.0, 7.0
        d2 = (ub - y) / ub
        expected = (1 - (2 * (1 - u) + 2 * (u - 0.5) * (1 - d2) ** (eta + 1)) ** (1 / (eta + 1))) * ub
        assert polynomial_delta(u, y, ub, eta) == pytest.approx(expected, rel=1e-14)

    def test_within_bounds(self):
        rng = np.random.default_rng(5)
        upper = np.full((1000, 4), 9.0)
        x = rng.random((1000, 4)) * 9
        y = polynomial_mutation(x, OperatorParams(p_m=1.0), rng, upper)
        assert np.all((y >= 0) & (y <= 9))

    def test_default_rate(self):
        assert OperatorParams().mutation_rate(8) == 1 / 8


class TestVariation:
    def test_rank_wins_tournament(self):
        rank, crowd = np.array([0, 1]), np.array([0.0, 5.0])

        class Duel(FixedRng):
            def __init__(self):
                super().__init__(0.9)
                self.draws = [np.array([0, 1, 0]), np.array([1, 0, 1])]

            def integers(self, lo, hi, n):
                return self.draws.pop(0)

        assert tournament(rank, crowd, Duel(), 3).tolist() == [0, 0, 0]

    def test_bypass_copies_winners(self):
        genes = np.array([[0.0, 1.0], [2.0, 3.0], [4.0, 5.0], [1.0, 1.0]])
        pop = Population(genes, [ev(c, 0.1 * c) for c in range(4)])
        fast_nondominated_sort(pop)
        kids = make_children(pop, OperatorParams(p_c=0.0, p_m=0.0), np.random.default_rng(3), np.full(2, 9.0))
        assert all(any(np.array_equal(k, g) for g in genes) for k in kids)

    def test_identical_parents_only_mutate(self):
        genes = np.array([[1.0, 2.0], [1.0, 2.0]])
        pop = Population(genes, [ev(1, 0.1)] * 2)
        fast_nondominated_sort(pop)
        kids = make_children(pop, OperatorParams(p_m=0.0), np.random.default_rng(3), np.full(2, 9.0))
        np.testing.assert_array_equal(kids, genes)


def replay_selection(evals, n):
    fronts = brute_fronts(evals)
    chosen = []
    for front in fronts:
        if len(chosen) + len(front) <= n:
            chosen += front
            continue
        pts = [(evals[i].cost if evals[i].feasible else 0.0,
                evals[i].resilience if math.isfinite(evals[i].resilience) else 0.0) for i in front]
        dist = {i: 0.0 for i in front}
        if len(front) <= 2:
            dist = {i: math.inf for i in front}
        else:
            for k in range(2):
                order = sorted(range(len(front)), key=lambda a: pts[a][k])
                span = pts[order[-1]][k] - pts[order[0]][k]
                dist[front[order[0]]] = dist[front[order[-1]]] = math.inf
                for a in range(1, len(order) - 1):
                    if span > 0:
                        dist[front[order[a]]] += (pts[order[a + 1]][k] - pts[order[a - 1]][k]) / span
        ranked = sorted(front, key=lambda i: -dist[i])
        chosen += ranked[: n - len(chosen)]
        break
    return chosen


class TestEnvironmentalSelection:
    def test_front_fits_exactly(self):
        evals = [ev(1, 0.1), ev(2, 0.2), ev(3, 0.05), ev(4, 0.01)]
        assert sorted(environmental_selection(pop_of(evals), 2).tolist()) == [0, 1]

    def test_truncation_by_crowding(self):
        evals = [ev(c, c / 10) for c in range(5)]
        chosen = environmental_selection(pop_of(evals), 3).tolist()
        assert 0 in chosen and 4 in chosen and len(chosen) == 3

    @pytest.mark.parametrize("seed", range(20))
    def test_rule_replay(self, seed):
        rng = np.random.default_rng(seed)
        # distinct costs keep the replay free of tie-ordering ambiguity
        costs = rng.permutation(8).astype(float)
        evals = [ev(c, float(rng.integers(0, 6)) / 5) for c in costs]
        got = environmental_selection(pop_of(evals), 4).tolist()
        want = replay_selection(evals, 4)
        assert sorted(got) == sorted(want)
