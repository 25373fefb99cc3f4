from fractions import Fraction as F

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from discrete_barycenter import (
    FLOAT,
    DataError,
    DiscreteMeasure,
    SizeCapError,
    TransportPlan,
    centroid_set,
    is_non_mass_splitting,
    sparsity_bound,
    squared_distance,
    transport_cost,
    union_support,
    weighted_centroid,
)
from discrete_barycenter.oracle import brute_force_phi
from instances import HALF, QUARTER, grid_pair, random_instances, singletons

rationals = st.fractions(min_value=-5, max_value=5, max_denominator=6)


def points(d, n):
    return st.lists(st.tuples(*[rationals] * d), min_size=n, max_size=n)


@st.composite
def weights(draw, n):
    raw = draw(st.lists(st.integers(1, 9), min_size=n, max_size=n))
    return [F(x, sum(raw)) for x in raw]


# -- squared distance and centroids -----------------------------------------


def test_squared_distance_examples():
    assert squared_distance((0, 0), (1, 0)) == 1
    assert squared_distance((0, 1), (1, 0)) == 2
    assert squared_distance((F(1, 3), 2), (F(1, 3), 2)) == 0


def test_squared_distance_dimension_mismatch():
    with pytest.raises(DataError):
        squared_distance((0, 0), (0, 0, 0))


def test_weighted_centroid_examples():
    assert weighted_centroid([(0, 1), (0, 0)], [HALF, HALF]) == (0, HALF)
    assert weighted_centroid([(1, 0), (1, 1)], [HALF, HALF]) == (1, HALF)
    x = (F(2, 3), -1)
    assert weighted_centroid([x, x, x], [F(1, 6), F(1, 3), HALF]) == x


def test_weighted_centroid_length_mismatch():
    with pytest.raises(DataError):
        weighted_centroid([(0,), (1,)], [1])


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 3).flatmap(lambda d: st.integers(1, 4).flatmap(
    lambda n: st.tuples(points(d, n), weights(n), points(d, 1)))))
def test_centroid_decomposition(data):
    xs, lam, (s,) = data
    c = weighted_centroid(xs, lam)
    lhs = sum(w * squared_distance(s, x) for w, x in zip(lam, xs))
    rhs = squared_distance(s, c) + sum(w * squared_distance(c, x) for w, x in zip(lam, xs))
    assert lhs == rhs


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 3).flatmap(lambda d: st.integers(1, 4).flatmap(
    lambda n: st.tuples(points(d, n), weights(n), points(d, 1)))))
def test_centroid_is_strict_minimiser(data):
    xs, lam, (s,) = data
    c = weighted_centroid(xs, lam)

    def f(p):
        return sum(w * squared_distance(p, x) for w, x in zip(lam, xs))

    if s != c:
        assert f(s) > f(c)


# -- measures ----------------------------------------------------------------


def test_measure_is_sorted_and_merged():
    m = DiscreteMeasure([(1, 0), (0, 1), (1, 0)], [QUARTER, HALF, QUARTER])
    assert m.points == ((0, 1), (1, 0))
    assert m.masses == (HALF, HALF)


@pytest.mark.parametrize(
    "points, masses",
    [([(0,)], [0]), ([(0,), (1,)], [HALF, F(1, 3)]), ([(0,), (1, 1)], [HALF, HALF]), ([], [])],
)
def test_invalid_measures_rejected(points, masses):
    with pytest.raises(DataError):
        DiscreteMeasure(points, masses)


def test_float_masses_near_one_are_renormalised():
    m = DiscreteMeasure([(0,), (1,)], [0.5, 0.4999995], arith=FLOAT)
    assert abs(sum(m.masses) - 1) < 1e-15


def test_partial_measure():
    m = DiscreteMeasure([(0,)], [HALF], kind="partial")
    assert m.total_mass == HALF
    with pytest.raises(DataError):
        DiscreteMeasure([(0,), (1,)], [HALF, 1], kind="partial")


def test_float_points_within_tolerance_merge():
    m = DiscreteMeasure([(1.0,), (1.0 + 1e-12,)], [0.5, 0.5], arith=FLOAT)
    assert len(m) == 1 and m.masses == (1.0,)


# -- supports ----------------------------------------------------------------


def test_union_support_examples():
    measures, _ = grid_pair()
    assert union_support(measures) == [(0, 0), (0, 1), (1, 0), (1, 1), (2, 0), (2, 1)]
    assert union_support([measures[0], measures[0]]) == list(measures[0].points)
    assert union_support(singletons()[0]) == [(0, 0), (1, 0)]


def test_centroid_set_examples():
    measures, w = grid_pair()
    S = centroid_set(measures, w)
    # all 3x3 midpoints by hand; (1, 1/2) arises three times
    pairs = {((a + c) / 2, (b + d) / 2) for a, b in measures[0].points for c, d in measures[1].points}
    expected = {(0, HALF), (HALF, 0), (HALF, 1), (1, HALF), (F(3, 2), 0), (F(3, 2), 1), (2, HALF)}
    assert pairs == expected
    assert set(S) == expected and len(S) == 7 and S == sorted(S)
    assert centroid_set(*singletons()) == [(HALF, 0)]
    P = DiscreteMeasure([(3, 4)], [1])
    assert centroid_set([P, P, P], [F(1, 3)] * 3) == [(3, 4)]


def test_centroid_set_cap():
    measures, w = grid_pair()
    with pytest.raises(SizeCapError, match="too large"):
        centroid_set(measures, w, cap=6)


def test_support_size_bounds():
    for measures, w in random_instances(40, seed=3):
        total = sum(len(P) for P in measures)
        prod = 1
        for P in measures:
            prod *= len(P)
        assert len(union_support(measures)) <= total
        assert len(centroid_set(measures, w)) <= prod


def test_sparsity_bound():
    measures, _ = grid_pair()
    assert sparsity_bound(measures) == 5
    assert sparsity_bound(singletons()[0]) == 1
    assert sparsity_bound([DiscreteMeasure([(0,)], [1])] * 5) == 1
    # four full 16x16 grids
    grid = DiscreteMeasure([(x, y) for x in range(16) for y in range(16)], [F(1, 256)] * 256)
    assert sparsity_bound([grid] * 4) == 1021


# -- transport ---------------------------------------------------------------


def test_transport_cost_examples():
    measures, w = grid_pair()
    bary = DiscreteMeasure([(0, HALF), (1, HALF), (2, HALF)], [QUARTER, HALF, QUARTER])
    phi, plan = transport_cost(bary, measures, w)
    assert phi == QUARTER and plan.is_valid()
    assert transport_cost(measures[0], [measures[0]], [1])[0] == 0
    org = DiscreteMeasure([(1, 0), (1, 1)], [HALF, HALF])
    assert transport_cost(org, measures, w)[0] == HALF


def test_transport_cost_matches_oracle_on_random_instances():
    for measures, w in random_instances(30, seed=11, sizes=(2, 3, 4)):
        P0 = measures[0]
        phi, plan = transport_cost(P0, measures, w)
        assert plan.is_valid()
        assert phi == plan.cost(w) == brute_force_phi(P0, measures, w, 8)


def test_non_mass_splitting_examples():
    (P1, P2), w = grid_pair()
    # vertical matching: every atom of the barycenter goes to one point per measure
    bary = DiscreteMeasure([(0, HALF), (1, HALF), (2, HALF)], [QUARTER, HALF, QUARTER])
    flows = {(0, j, j): m for j, m in enumerate(bary.masses)}
    flows.update({(1, j, j): m for j, m in enumerate(bary.masses)})
    assert is_non_mass_splitting(TransportPlan(bary, (P1, P2), flows))
    # top atom (1,1) split between (0,1) and (2,1)
    org = DiscreteMeasure([(1, 0), (1, 1)], [HALF, HALF])
    split = {(0, 0, 1): HALF, (0, 1, 0): QUARTER, (0, 1, 2): QUARTER,
             (1, 0, 0): QUARTER, (1, 0, 2): QUARTER, (1, 1, 1): HALF}
    plan = TransportPlan(org, (P1, P2), split)
    assert plan.is_valid() and not is_non_mass_splitting(plan)
    one = DiscreteMeasure([(5,)], [1])
    assert is_non_mass_splitting(TransportPlan(one, (one,), {(0, 0, 0): F(1)}))


def test_plan_marginal_errors_detected():
    (P1, P2), w = grid_pair()
    org = DiscreteMeasure([(1, 0), (1, 1)], [HALF, HALF])
    plan = TransportPlan(org, (P1,), {(0, 0, 1): HALF, (0, 1, 0): HALF})
    assert not plan.is_valid()
