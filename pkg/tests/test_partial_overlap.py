import math

import numpy as np
import pytest
from scipy.optimize import minimize

from sapd import (
    GainBand,
    Objective,
    PiecewisePsd,
    Scenario,
    SingularPointError,
    SolverOptions,
    UnsupportedInstanceError,
    capacity_of,
    equation_residuals,
    gamma1,
    gamma2,
    sigma2_upper_bound,
    solve,
    solve_partial_overlap,
    sweep_curve,
    total_power,
)
from sapd.partial_overlap import (
    ratio_residual,
    sigma1_candidates,
    solve_c_from_gammas,
    widths_from_powers,
)

from conftest import INTERMEDIATE, INTERMEDIATE_VALUE


@pytest.fixture(scope="module")
def report():
    return solve(INTERMEDIATE)


@pytest.fixture(scope="module")
def interior(report):
    sols = [c.solution for c in report.candidates
            if c.form == "partial" and c.solution.subcase == "interior"]
    assert len(sols) == 1
    return sols[0]


def three_band_value(x, sc):
    """Sum capacity of the layout S1 | S12 | S2 with full power, ``x = (S1, S12, a1, a2)``.

    ``a_i`` is the share of user i's power placed in its exclusive band.
    """
    W, P1, P2 = sc.params[:3]
    S1, S12, a1, a2 = x
    S2 = W - S1 - S12
    if min(S1, S12, S2) <= 1e-12 or not (0 <= a1 <= 1 and 0 <= a2 <= 1):
        return -np.inf
    psd = PiecewisePsd.from_bands(
        [S1, S12, S2],
        [[a1 * P1 / S1, 0], [(1 - a1) * P1 / S12, (1 - a2) * P2 / S12], [0, a2 * P2 / S2]])
    return float(capacity_of(sc, psd).sum())


def test_intermediate_instance_prefers_partial_overlap(report):
    assert report.form == "partial"
    assert report.value == pytest.approx(INTERMEDIATE_VALUE, rel=1e-9)
    fd = next(c for c in report.candidates if c.form == "fdma").value
    fs = next(c for c in report.candidates if c.form == "full_share").value
    assert report.value > max(fd, fs) * (1 + 1e-6)


def test_interior_solution_is_consistent(interior):
    sc = INTERMEDIATE
    psd = interior.psd()
    assert interior.max_residual <= 1e-10
    for u in range(2):
        assert total_power(psd, u) == pytest.approx(sc.power[u], rel=1e-12)
    assert capacity_of(sc, psd).sum() == pytest.approx(interior.B, rel=1e-13)
    assert interior.sigma2 <= sigma2_upper_bound(sc)
    assert min(interior.c1, interior.c2, interior.S1, interior.S2, interior.S12) > 0
    assert interior.stationarity < 1e-6
    assert not interior.endpoint


def test_interior_solution_is_a_local_maximum(interior):
    sc = INTERMEDIATE
    W, P1, P2 = sc.params[:3]
    s = interior
    x0 = np.array([s.S1, s.S12, s.S1 * (s.sigma1 + s.c1) / P1, s.S2 * (s.sigma2 + s.c2) / P2])
    assert three_band_value(x0, sc) == pytest.approx(s.B, rel=1e-13)
    res = minimize(lambda x: -three_band_value(x, sc), x0, method="Nelder-Mead",
                   options={"xatol": 1e-12, "fatol": 1e-15, "maxiter": 20000})
    assert -res.fun <= s.B * (1 + 1e-10)


def test_stationarity_conditions_at_solution(interior):
    sc = INTERMEDIATE
    s = interior
    assert abs(gamma1(s.sigma1, s.sigma2, s.c1, sc)) < 1e-9 * abs(
        gamma1(s.sigma1, s.sigma2, 0.0, sc))
    assert abs(gamma2(s.sigma1, s.sigma2, s.c2, sc)) < 1e-9 * abs(
        gamma2(s.sigma1, s.sigma2, 0.0, sc))
    W, P1, P2, N1, N2, h11, _, _, h22 = sc.params
    # exclusive bands sit at the disjoint-split water level
    assert (s.c2 + s.sigma2) * N1 * h22 == pytest.approx((s.c1 + s.sigma1) * N2 * h11, rel=1e-10)
    assert abs(ratio_residual(s.sigma1, s.sigma2, sc)) <= 1e-9 * (s.c1 + s.sigma1)


def test_elimination_helpers_round_trip(interior):
    sc = INTERMEDIATE
    s = interior
    c1, c2 = solve_c_from_gammas(s.sigma1, s.sigma2, sc)
    assert (c1, c2) == pytest.approx((s.c1, s.c2), rel=1e-12)
    widths = widths_from_powers(s.sigma1, s.sigma2, c1, c2, sc)
    assert widths.feasible
    assert sum(widths) == pytest.approx(sc.bandwidth, rel=1e-14)
    W, P1, P2 = sc.params[:3]
    assert widths.S1 * (s.sigma1 + c1) + widths.S12 * s.sigma1 == pytest.approx(P1, rel=1e-12)
    assert widths.S2 * (s.sigma2 + c2) + widths.S12 * s.sigma2 == pytest.approx(P2, rel=1e-12)
    roots = sigma1_candidates(s.sigma2, sc)
    assert np.min(np.abs(np.asarray(roots) - s.sigma1)) <= 1e-9 * s.sigma1


def test_widths_singular_point():
    with pytest.raises(SingularPointError):
        widths_from_powers(2.0, 3.0, 3.0, 2.0, INTERMEDIATE)


def test_equation_residuals_keys(interior):
    res = equation_residuals(interior, INTERMEDIATE)
    assert set(res) == {"bandwidth", "power1", "power2", "width_ratio", "gamma1", "gamma2"}
    assert all(v is not None for v in res.values())


def test_degenerate_candidates_mark_missing_conditions(report):
    subs = [c.solution for c in report.candidates if c.form == "partial"]
    kinds = {s.subcase for s in subs}
    assert kinds <= {"interior", "s1_zero", "s2_zero"}
    for s in subs:
        if s.subcase == "s1_zero":
            assert s.S1 == 0 and s.c1 == 0
            assert s.residuals["gamma1"] is None and s.residuals["width_ratio"] is None
            assert s.residuals["gamma2"] <= 1e-8
        if s.subcase == "s2_zero":
            assert s.S2 == 0 and s.c2 == 0
            assert s.residuals["gamma2"] is None


def test_total_power_rule_is_not_better():
    ed = solve(INTERMEDIATE)
    tp = solve(INTERMEDIATE, options=SolverOptions(width_rule="total_power"))
    assert tp.value <= ed.value * (1 + 1e-12)
    # the two conditions pick visibly different interior points
    assert tp.value < ed.value * (1 - 1e-7)


def test_symmetric_instance_relabel(report):
    other = solve(INTERMEDIATE.swapped())
    assert other.value == pytest.approx(report.value, rel=1e-10)
    a, b = report.best.solution, other.best.solution
    assert (b.S1, b.S2, b.sigma1, b.sigma2) == pytest.approx((a.S2, a.S1, a.sigma2, a.sigma1),
                                                             rel=1e-7)


def test_strong_symmetric_coupling_picks_fdma():
    sc = Scenario(1.0, (10.0, 10.0), (1.0, 1.0), ((1.0, 20.0), (20.0, 1.0)))
    r = solve(sc)
    assert r.form == "fdma"
    assert r.best.solution.split == 0.5


def test_zero_coupling_picks_full_share():
    sc = Scenario(2.0, (5.0, 3.0), (0.5, 0.25), ((1.0, 0.0), (0.0, 2.0)))
    assert solve(sc).form == "full_share"


def test_selective_gains_are_unsupported():
    g = ((1, 0.1), (0.1, 1))
    sc = Scenario(1, (1, 1), (1, 1), g, gain_bands=[GainBand(0, 0.5, g), GainBand(0.5, 1, g)])
    with pytest.raises(UnsupportedInstanceError):
        solve(sc)
    with pytest.raises(UnsupportedInstanceError):
        solve_partial_overlap(sc)


def test_unequal_weights_skip_partial_overlap():
    sc = Scenario(1.0, (48.103, 38.523), (1, 1), ((1, 0.08), (0.115, 1)), weights=(1, 2))
    r = solve(sc)
    assert all(c.form != "partial" for c in r.candidates)
    assert any("weights" in n for n in r.notes)


def test_equal_nonunit_weights_scale_value(report):
    sc = Scenario(1.0, (48.103, 38.523), (1, 1), ((1, 0.08), (0.115, 1)), weights=(3, 3))
    assert solve(sc).value == pytest.approx(3 * report.value, rel=1e-10)


def test_product_objective_ranks_candidates(report):
    r = solve(INTERMEDIATE, Objective("product"))
    assert any("product" in n for n in r.notes)
    for c in r.candidates:
        assert c.value == pytest.approx(math.prod(c.capacities), rel=1e-12)
    assert r.value == max(c.value for c in r.candidates)


def test_log_base_scales_values(report):
    r = solve(INTERMEDIATE, Objective(base="e"))
    assert r.value == pytest.approx(report.value * math.log(2), rel=1e-10)
    assert r.form == report.form


def test_solver_options_validation():
    with pytest.raises(ValueError):
        SolverOptions(width_rule="other")
    with pytest.raises(ValueError):
        SolverOptions(sigma2_samples=2)


def test_sweep_curve_rows(report):
    rows = sweep_curve(INTERMEDIATE, samples=64)
    assert rows
    sig = sigma2_upper_bound(INTERMEDIATE)
    assert rows[-1].sigma2 == pytest.approx(sig)
    by_branch = {}
    for r in rows:
        by_branch.setdefault(r.branch, []).append(r.sigma2)
        if r.feasible:
            assert r.B <= report.value * (1 + 1e-9)
        else:
            assert math.isnan(r.B)
    for values in by_branch.values():
        assert all(b > a for a, b in zip(values, values[1:]))
    assert any(r.feasible for r in rows) and any(not r.feasible for r in rows)
