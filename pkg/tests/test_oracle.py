from fractions import Fraction as F
from itertools import product

import pytest

from discrete_barycenter import (
    DataError,
    DiscreteMeasure,
    SizeCapError,
    exact_barycenter,
    squared_distance,
    transport_cost,
    wasserstein2_squared,
)
from discrete_barycenter.oracle import (
    IntegralTransportInstance,
    brute_force_barycenter,
    brute_force_phi,
    brute_force_w2,
    reference_values,
)
from instances import HALF, QUARTER, grid_pair, random_instances


def test_top_atom_contribution():
    (P1, _), _ = grid_pair()
    top = DiscreteMeasure([(1, 1)], [HALF], kind="partial")
    image = DiscreteMeasure([(0, 1), (2, 1)], [QUARTER, QUARTER], kind="partial")
    assert brute_force_w2(top, image, 4) == HALF


def test_trivial_oracle_values():
    (P1, P2), w = grid_pair()
    assert brute_force_w2(P1, P1, 4) == 0
    a, b = DiscreteMeasure([(0, 0)], [1]), DiscreteMeasure([(2, 1)], [1])
    assert brute_force_w2(a, b, 1) == squared_distance((0, 0), (2, 1)) == 5
    assert brute_force_phi(P1, [P1], [1], 4) == 0


def test_phi_values_grid_pair():
    measures, w = grid_pair()
    bary = DiscreteMeasure([(0, HALF), (1, HALF), (2, HALF)], [QUARTER, HALF, QUARTER])
    org = DiscreteMeasure([(1, 0), (1, 1)], [HALF, HALF])
    assert brute_force_phi(bary, measures, w, 4) == QUARTER
    assert brute_force_phi(org, measures, w, 4) == HALF


def test_enumeration_against_explicit_listing():
    # 2x2 transports with margins (1/2, 1/2): one free cell t in {0, 1/2}
    P0 = DiscreteMeasure([(0,), (3,)], [HALF, HALF])
    P1 = DiscreteMeasure([(1,), (2,)], [HALF, HALF])
    costs = []
    for t in (0, HALF):
        flows = [[t, HALF - t], [HALF - t, t]]
        costs.append(sum(flows[j][k] * squared_distance(P0.points[j], P1.points[k])
                         for j, k in product(range(2), range(2))))
    assert brute_force_w2(P0, P1, 2) == min(costs) == 1


def test_limits_enforced():
    big = DiscreteMeasure([(x,) for x in range(5)], [F(1, 5)] * 5)
    with pytest.raises(SizeCapError):
        brute_force_w2(big, big, 5)
    P = DiscreteMeasure([(0,)], [1])
    with pytest.raises(SizeCapError):
        brute_force_w2(P, P, 17)
    odd = DiscreteMeasure([(0,), (1,)], [F(1, 3), F(2, 3)])
    with pytest.raises(DataError):
        IntegralTransportInstance(odd, P, 4)


def test_random_transport_costs_match_lp():
    for measures, w in random_instances(25, seed=21):
        for P in measures[1:]:
            assert wasserstein2_squared(measures[0], P) == brute_force_w2(measures[0], P, 8)


def test_exact_barycenter_beats_every_grid_measure_on_centroids():
    measures, w = grid_pair()
    S = sorted({tuple((a + b) / 2 for a, b in zip(x, y)) for x in measures[0].points for y in measures[1].points})
    best, atoms = brute_force_barycenter(S, measures, w, 4)
    ex = exact_barycenter(measures, w)
    assert ex.phi <= best == QUARTER
    assert transport_cost(DiscreteMeasure([p for p, _ in atoms], [m for _, m in atoms]), measures, w)[0] == best


def test_exact_barycenter_certified_on_small_random_instances():
    checked = 0
    for measures, w in random_instances(10, seed=8, counts=(2,), sizes=(2,), dims=(1, 2)):
        w = [HALF, HALF]
        S = sorted({tuple((a + b) / 2 for a, b in zip(x, y)) for x in measures[0].points for y in measures[1].points})
        best, _ = brute_force_barycenter(S, measures, w, 8)
        assert exact_barycenter(measures, w).phi <= best
        checked += 1
    assert checked >= 5


def test_reference_values_agree():
    for name, oracle, solver in reference_values():
        assert oracle == solver, name
