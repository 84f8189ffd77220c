import math

import numpy as np
import pytest

from sapd import (
    BudgetExceededError,
    GainBand,
    GainTableMismatchError,
    Objective,
    Scenario,
    brute_force,
    capacity_of,
    discretize,
    full_share_capacity,
    solve,
    verify_max_power,
    verify_rectangular_structure,
)
from sapd.oracle import (
    Allocation,
    _compositions,
    estimated_work,
    interference_free_bound,
    search_space_size,
)

from conftest import INTERMEDIATE, random_flat


def test_compositions_are_complete_and_sorted():
    comps = _compositions(3, 4)
    assert len(comps) == math.comb(4 + 3, 3)
    assert comps.sum(axis=1).max() == 4 and comps.min() == 0
    keys = [tuple(r) for r in comps]
    assert keys == sorted(keys)
    assert len(set(keys)) == len(keys)


def test_search_space_size():
    assert search_space_size(2, 4) == 15 ** 2
    assert search_space_size(16, 8) == math.comb(24, 16) ** 2


def test_single_channel_matches_full_share():
    sc = Scenario(2.0, (3.0, 1.0), (0.5, 0.4), ((1.0, 0.01), (0.02, 1.5)))
    a = brute_force(discretize(sc, 1, 8))
    assert a.units.tolist() == [[8, 8]]
    assert a.value == pytest.approx(full_share_capacity(sc).value, rel=1e-13)


def test_symmetric_strong_coupling_two_channels_is_disjoint():
    sc = Scenario(1.0, (10.0, 10.0), (1.0, 1.0), ((1.0, 20.0), (20.0, 1.0)))
    a = brute_force(discretize(sc, 2, 4), method="enumerate")
    assert sorted(map(tuple, a.units.T.tolist())) == [(0, 4), (4, 0)]
    assert a.units.tolist() == [[0, 4], [4, 0]]  # lexicographically first of the two mirrors
    b = brute_force(discretize(sc, 2, 4))
    assert (a.units == b.units).all()


def test_dp_matches_enumeration(rng):
    for _ in range(12):
        sc = random_flat(rng)
        for k, L in [(3, 4), (4, 3)]:
            inst = discretize(sc, k, L)
            for obj in (Objective(), Objective("product")):
                a = brute_force(inst, obj)
                b = brute_force(inst, obj, method="enumerate")
                assert a.value == pytest.approx(b.value, rel=1e-12)
                assert (a.units == b.units).all()


def test_allocation_evaluates_consistently(rng):
    sc = random_flat(rng, "intermediate")
    a = brute_force(discretize(sc, 6, 6))
    assert capacity_of(sc, a.psd()) == pytest.approx(a.capacities, rel=1e-12)
    assert (a.used_units <= 6).all()
    assert a.powers.sum(axis=0) == pytest.approx(a.used_units * np.asarray(sc.power) / 6)


def test_frequency_selective_instance():
    g1, g2 = ((1.0, 0.3), (0.2, 0.5)), ((0.4, 0.1), (0.6, 1.2))
    sc = Scenario(1.0, (4.0, 6.0), (0.1, 0.2), g1,
                  gain_bands=[GainBand(0, 0.5, g1), GainBand(0.5, 1.0, g2)])
    a = brute_force(discretize(sc, 4, 4))
    b = brute_force(discretize(sc, 4, 4), method="enumerate")
    assert a.value == pytest.approx(b.value, rel=1e-12)
    assert capacity_of(sc, a.psd()) == pytest.approx(a.capacities, rel=1e-12)
    with pytest.raises(GainTableMismatchError):
        discretize(sc, 3, 4)


def test_budget_refusal_reports_size():
    with pytest.raises(BudgetExceededError) as err:
        brute_force(discretize(INTERMEDIATE, 64, 64))
    exc = err.value
    assert exc.work == estimated_work(64, 64)
    assert exc.search_space == search_space_size(64, 64)
    assert exc.exit_code == 4
    with pytest.raises(BudgetExceededError):
        brute_force(discretize(INTERMEDIATE, 16, 8), method="enumerate")


def test_value_monotone_in_levels():
    prev = -np.inf
    for L in (2, 4, 8, 16):
        v = brute_force(discretize(INTERMEDIATE, 6, L)).value
        assert v >= prev - 1e-12 * abs(v)
        prev = v


def test_oracle_never_beats_analytic(rng):
    for coupling in ("weak", "intermediate", "strong"):
        for _ in range(3):
            sc = random_flat(rng, coupling)
            ref = solve(sc).value
            assert brute_force(discretize(sc, 8, 8)).value <= ref * (1 + 1e-9)


def test_interference_free_bound_is_admissible(rng):
    sc = random_flat(rng, "intermediate")
    inst = discretize(sc, 5, 6)
    a = brute_force(inst)
    for user in range(2):
        bound = interference_free_bound(inst, user, np.arange(5), 6)
        assert a.capacities[user] <= bound * (1 + 1e-12)
    assert interference_free_bound(inst, 0, np.arange(0), 6) == 0.0


def test_verify_max_power_flags_truncated_allocation():
    inst = discretize(INTERMEDIATE, 4, 8)
    a = brute_force(inst)
    assert verify_max_power(a).ok
    units = a.units.copy()
    units[:, 0] = 0
    units[0, 0] = 5
    C1, C2 = inst.capacity_tables()
    caps = np.array([C1[np.arange(4), units[:, 0], units[:, 1]].sum(),
                     C2[np.arange(4), units[:, 0], units[:, 1]].sum()])
    fake = Allocation(units, caps, float(caps.sum()), inst, Objective())
    rep = verify_max_power(fake)
    assert rep.flagged == (True, False)
    assert not rep.ok


def test_structure_symmetric_full_share_has_zero_spread():
    sc = Scenario(1.0, (2.0, 2.0), (1.0, 1.0), ((1.0, 0.01), (0.01, 1.0)))
    a = brute_force(discretize(sc, 4, 8))
    rep = verify_rectangular_structure(a)
    assert rep.shared_channels == [0, 1, 2, 3]
    assert rep.spread_units == (0, 0)
    assert rep.passed


def test_structure_ignores_single_user_channels():
    inst = discretize(INTERMEDIATE, 4, 8)
    units = np.array([[8, 0], [0, 1], [0, 3], [0, 4]])
    fake = Allocation(units, np.zeros(2), 0.0, inst, Objective())
    rep = verify_rectangular_structure(fake)
    assert rep.shared_channels == []
    assert rep.passed
