"""Closed-form reference values used to cross-check the numerical routes."""

import math
from fractions import Fraction

import numpy as np
import pytest

from fluctlab import killedwalk, oracles
from fluctlab.errors import NotLeftContinuous
from fluctlab.steplaw import left23, ssrw, step_law, unconditional_pmf


def test_central_binom_weight_exact_region():
    # C(2k, k) / 4^k by hand for small k
    assert oracles.central_binom_weight(0) == 1.0
    assert oracles.central_binom_weight(1) == 0.5
    assert oracles.central_binom_weight(2) == 0.375
    assert oracles.central_binom_weight(5) == pytest.approx(63 / 256, abs=0)


def test_central_binom_weight_switchover_is_smooth():
    # the lgamma route must agree with exact rationals where they overlap
    for k in range(25, 40):
        exact = Fraction(math.comb(2 * k, k), 4 ** k)
        assert oracles.central_binom_weight(k) == pytest.approx(
            float(exact), rel=1e-13)


def test_ssrw_pmf_against_convolution():
    for n in (1, 5, 12):
        pm = unconditional_pmf(ssrw(), n)
        for z in range(-n - 1, n + 2):
            assert oracles.ssrw_pmf(n, z) == pytest.approx(
                pm.at(z), abs=1e-15)


def test_ssrw_pmf_large_n_matches_exact_fraction():
    for n in (61, 64):
        for z in (0, 2, 10, n):
            z = z if (n + z) % 2 == 0 else z + 1
            exact = Fraction(math.comb(n, (n + z) // 2), 2 ** n)
            assert oracles.ssrw_pmf(n, z) == pytest.approx(
                float(exact), rel=1e-13)


def test_reflection_pmf_is_difference_of_binomials():
    # killed at 0, x=2 to y=4 in 6 steps: direct minus image
    val = oracles.simple_refl_pmf(2, 4, 6)
    expect = oracles.ssrw_pmf(6, 2) - oracles.ssrw_pmf(6, 6)
    assert val == pytest.approx(expect, abs=0)
    with pytest.raises(ValueError):
        oracles.simple_refl_pmf(0, 4, 6)


def test_reflection_tail_sums_pmf():
    x, n = 3, 15
    for y0 in (1, 4, 9):
        tail = sum(oracles.simple_refl_pmf(x, y, n)
                   for y in range(y0, x + n + 1))
        assert oracles.simple_refl_tail(x, y0, n) == pytest.approx(
            tail, abs=1e-14)


def test_tau1_pmf_is_a_probability_law():
    # P(first drop below the start happens at step 2k+1)
    total = sum(oracles.simple_tau1_pmf(k) for k in range(5000))
    assert 0.985 < total < 1.0
    assert oracles.simple_tau1_pmf(0) == 0.5
    assert oracles.simple_tau1_pmf(1) == 0.125


def test_tau0_survival_matches_killed_dp():
    prof = killedwalk.survival_profile(ssrw(), 0, 60)
    for n in range(1, 61):
        assert oracles.simple_tau0_survival(n) == pytest.approx(
            prof.survival[n], abs=1e-13)


def test_hitting_time_oracle_and_left_continuity_guard():
    # mass absorbed exactly at -x on step n equals (x/n) P(S(n) = -x)
    law = left23()
    pm = unconditional_pmf(law, 9)
    assert oracles.hitting_time_pmf(law, 3, 9) == pytest.approx(
        (3 / 9) * pm.at(-3), abs=1e-16)
    with pytest.raises(NotLeftContinuous):
        oracles.hitting_time_pmf(step_law([(-2, "1/2"), (2, "1/2")]), 1, 4)


def test_rayleigh_cdf_known_points():
    assert oracles.rayleigh_cdf(0.0) == 0.0
    assert oracles.rayleigh_cdf(math.sqrt(2 * math.log(2))) == pytest.approx(
        0.5, abs=1e-15)
    assert oracles.rayleigh_tail(1.0) == pytest.approx(
        math.exp(-0.5), rel=1e-15)
    assert oracles.rayleigh_cdf(40.0) == pytest.approx(1.0, abs=1e-15)


def test_meander_sq_cdf_integrates_density():
    grid = np.linspace(0.0, 8.0, 20001)
    dens = np.array([oracles.meander_sq_density(u) for u in grid])
    cum = np.concatenate([[0.0], np.cumsum(
        0.5 * (dens[1:] + dens[:-1]) * np.diff(grid))])
    for i in (2500, 5000, 10000, 20000):
        assert cum[i] == pytest.approx(
            oracles.meander_sq_cdf(grid[i]), abs=1e-6)
    assert oracles.meander_sq_cdf(0.0) == 0.0


def test_normal_cdf_symmetry():
    assert oracles.normal_cdf(0.0) == 0.5
    for z in (0.3, 1.0, 2.5):
        assert oracles.normal_cdf(z) + oracles.normal_cdf(-z) == pytest.approx(
            1.0, abs=1e-15)


def test_doob_kernel_simple():
    up, down = oracles.doob_kernel_simple(3)
    assert up == pytest.approx(4 / 6, abs=0)
    assert down == pytest.approx(2 / 6, abs=0)
    assert oracles.doob_kernel_simple(1) == (1.0, 0.0)


def test_ks_distance_discrete_toy():
    sites = [1, 2, 3]
    probs = [0.2, 0.5, 0.3]
    cdf = {1: 0.2, 2: 0.7, 3: 1.0}
    # both one-sided gaps count, so even a cdf through the right endpoints
    # of the steps is held off by the largest atom
    assert oracles.ks_distance_discrete(
        sites, probs, lambda v: cdf[round(v)]) == pytest.approx(0.5, abs=1e-12)
    assert oracles.ks_distance_discrete(
        sites, probs, lambda v: 0.0) == pytest.approx(1.0, abs=1e-15)
    # a cdf threading the jump midpoints halves that
    mid = {1: 0.1, 2: 0.45, 3: 0.85}
    assert oracles.ks_distance_discrete(
        sites, probs, lambda v: mid[round(v)]) == pytest.approx(
        0.25, abs=1e-12)


def test_ks_distance_sample_matches_hand_count():
    sample = np.array([0.5, 1.5, 2.5, 3.5])
    # uniform[0,4] cdf: empirical steps at each point, D = 1/8
    d = oracles.ks_distance_sample(sample, lambda v: v / 4.0)
    assert d == pytest.approx(0.125, abs=1e-12)


def test_asymptotic_prediction_regimes():
    fixed = oracles.AsymptoticPrediction(
        "fixed-x-tail", {"x": 2.0, "sigma": 1.0})
    assert fixed(10_000) > 0.0
    ray = oracles.AsymptoticPrediction("rayleigh")
    assert ray(1.0) == pytest.approx(oracles.rayleigh_cdf(1.0), abs=0)
    with pytest.raises(ValueError):
        oracles.AsymptoticPrediction("nonsense")(1.0)
