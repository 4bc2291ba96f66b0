"""Series engine, factorisation identities, ladder structure, renewal."""

import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fluctlab import killedwalk, oracles
from fluctlab import wienerhopf as wh
from fluctlab.errors import InsufficientRange
from fluctlab.steplaw import left23, ssrw, step_law, uniform3

LAWS = {"ssrw": ssrw(), "left23": left23(), "uniform3": uniform3()}


def minus2_law():
    # mean zero, downward jumps of size 2: exercises overshoot paths
    return step_law([(-2, "1/4"), (0, "1/4"), (1, "1/2")])


# -- truncated series algebra -------------------------------------------------

def test_series_exp_of_geometric_log():
    n = 30
    c = np.zeros(n + 1)
    c[1:] = 1.0 / np.arange(1, n + 1)   # log 1/(1-u)
    out = wh.TruncatedSeries(c).exp()
    np.testing.assert_allclose(out.coef, np.ones(n + 1), atol=1e-12)


def test_series_arithmetic_and_eval():
    s = wh.TruncatedSeries.from_coeffs([1.0, 2.0, 3.0])
    t = wh.TruncatedSeries.from_coeffs([0.5, -1.0, 0.0])
    assert (s + t).coef.tolist() == [1.5, 1.0, 3.0]
    assert (s - 1.0).coef.tolist() == [0.0, 2.0, 3.0]
    assert (1.0 - t).coef.tolist() == [0.5, 1.0, 0.0]
    assert (s * t).coef.tolist() == [0.5, 0.0, -0.5]
    assert s.eval(0.1) == pytest.approx(1.0 + 0.2 + 0.03, abs=1e-15)
    assert wh.TruncatedSeries.one(4).coef.tolist() == [1.0, 0, 0, 0, 0]


def test_series_log_guards_constant_term():
    with pytest.raises(ValueError):
        wh.TruncatedSeries.from_coeffs([0.0, 1.0]).log()


@settings(max_examples=80, deadline=None)
@given(st.lists(st.floats(min_value=-0.4, max_value=0.4), min_size=1,
                max_size=10),
       st.floats(min_value=0.3, max_value=2.5))
def test_series_exp_log_round_trip(tail, head):
    s = wh.TruncatedSeries.from_coeffs([head] + tail)
    back = s.log().exp()
    np.testing.assert_allclose(back.coef, s.coef, atol=1e-9)
    fwd = s.exp().log()
    np.testing.assert_allclose(fwd.coef, s.coef, atol=1e-9)


# -- epoch generating functions against closed forms --------------------------

def test_epoch_egf_matches_first_passage_oracle():
    # unit walk, first visit to (-inf, 0]: immediately down (n = 1) or up
    # and then a one-step descent from 1, which lands at the even times
    f = wh.epoch_egf(ssrw(), 41, "le0")
    assert f.coef[0] == 0.0
    assert f.coef[1] == pytest.approx(0.5, abs=1e-14)
    for k in range(0, 19):
        assert f.coef[2 * k + 2] == pytest.approx(
            0.5 * oracles.simple_tau1_pmf(k), abs=1e-13)
        assert f.coef[2 * k + 3] == pytest.approx(0.0, abs=1e-13)


def test_survival_series_matches_oracle_coefficients():
    s = wh.spitzer_survival_series(ssrw(), 60)
    assert s.coef[0] == pytest.approx(1.0, abs=1e-14)
    for n in range(1, 61):
        assert s.coef[n] == pytest.approx(
            oracles.simple_tau0_survival(n), abs=1e-13)


def test_halfline_series_side_validation():
    with pytest.raises(ValueError):
        wh.halfline_log_series(ssrw(), 10, "both")


def test_wh_identity_residual_all_laws():
    for name, law in LAWS.items():
        assert wh.wh_identity_residual(law, 120) < 1e-10, name
    assert wh.wh_identity_residual(minus2_law(), 120) < 1e-10


def test_spitzer_vs_dp_gap():
    for name, law in LAWS.items():
        assert wh.spitzer_vs_dp_gap(law, 120) < 1e-10, name


def test_symmetric_continuous_reference():
    f_err, s_err = wh.symmetric_continuous_reference(200)
    assert f_err < 1e-12 and s_err < 1e-12


# -- exact path duality -------------------------------------------------------

def test_duality_path_check_exact_zero():
    assert wh.duality_path_check(ssrw(), 12) == 0
    assert wh.duality_path_check(left23(), 9) == 0
    assert wh.duality_path_check(uniform3(), 8) == 0
    assert wh.duality_path_check(minus2_law(), 8) == 0


def test_duality_path_budget_guard():
    with pytest.raises(ValueError):
        wh.duality_path_check(uniform3(), 40)


# -- measure-level factorisation ----------------------------------------------

def test_epoch_measure_rows_match_series_coefficients():
    law = left23()
    n = 40
    sites, mass, loss = wh.epoch_harmonic_measure(law, n, "le0")
    f = wh.epoch_egf(law, n, "le0")
    for k in range(1, n + 1):
        assert mass[k - 1].sum() == pytest.approx(
            f.coef[k], abs=1e-12 + loss)
    assert loss <= 1e-12


def test_epoch_measure_site_support():
    sites, mass, _ = wh.epoch_harmonic_measure(minus2_law(), 30, "le0")
    occupied = {int(s) for s, col in zip(sites, mass.sum(axis=0)) if col > 0}
    assert occupied == {0, -1, -2}
    # upward passage of this law overshoots to 1 only (max jump 1)
    sites_u, mass_u, _ = wh.epoch_harmonic_measure(minus2_law(), 30, "gt0")
    occ_u = {int(s) for s, col in zip(sites_u, mass_u.sum(axis=0)) if col > 0}
    assert occ_u == {1}


def test_dual_factorisation_small():
    for u in (0.3, 0.7):
        gap, defect = wh.dual_factorisation_check(uniform3(), u, 50)
        assert gap <= 1e-9 + defect
    with pytest.raises(ValueError):
        wh.dual_factorisation_check(uniform3(), 1.2, 10)


# -- ladder heights and renewal ----------------------------------------------

def test_ladder_height_structural_route():
    mags, defect = wh.ladder_height_law(ssrw())
    assert defect == 0.0
    assert mags == {1: 0.5, 0: 0.5}
    mags23, d23 = wh.ladder_height_law(left23())
    assert d23 == 0.0
    assert mags23[1] == pytest.approx(2 / 3, abs=1e-15)
    assert mags23[0] == pytest.approx(1 / 3, abs=1e-15)


def test_ladder_height_dp_route_against_exact_enumeration():
    law = minus2_law()
    mags, defect = wh.ladder_height_law(law, order=2000)
    assert set(mags) <= {0, 1, 2}
    assert sum(mags.values()) <= 1.0 + 1e-12
    assert sum(mags.values()) + defect >= 1.0 - 1e-9
    # exact-rational absorption ledger over 20 epochs bounds each mass
    layers, absorbed = killedwalk.exact_killed_layers(law, 0, 20)
    held = sum(layers[20].values(), Fraction(0))
    partial = {}
    for dead in absorbed:
        for site, m in dead.items():
            partial[-site] = partial.get(-site, Fraction(0)) + m
    for mag, part in partial.items():
        assert float(part) - 1e-12 <= mags[mag] <= float(part + held) + defect


def test_renewal_function_linear_on_unit_ladders():
    u, cert = wh.renewal_function(ssrw(), 12)
    assert cert < 1e-10
    assert u[0] == 1.0
    np.testing.assert_allclose(u[1:], 2.0 * np.arange(1, 13),
                               atol=cert + 1e-10)
    u23, cert23 = wh.renewal_function(left23(), 12)
    np.testing.assert_allclose(u23[1:], 1.5 * np.arange(1, 13),
                               atol=cert23 + 1e-10)
    assert cert23 < 1e-10


def test_rho_tail_fit_centered_laws():
    for law in (ssrw(), left23()):
        assert wh.rho_tail_fit(law, 32, 4096) == pytest.approx(0.5, abs=0.03)
    with pytest.raises(InsufficientRange):
        wh.rho_tail_fit(ssrw(), 100, 400)
