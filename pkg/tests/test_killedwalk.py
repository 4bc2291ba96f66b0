"""Killed-walk DP: survival ledgers, martingale identities, exact oracle."""

import io
import math
from fractions import Fraction

import numpy as np
import pytest

from fluctlab import killedwalk as kw
from fluctlab import oracles
from fluctlab.errors import NonLattice, WindowTooSmall
from fluctlab.steplaw import left23, ssrw, step_law, uniform3

LAWS = {"ssrw": ssrw(), "left23": left23(), "uniform3": uniform3()}


def test_survival_matches_reflection_oracle():
    prof = kw.survival_profile(ssrw(), 1, 200)
    for n in range(1, 201):
        assert prof.survival[n] == pytest.approx(
            oracles.simple_refl_tail(1, 1, n), abs=1e-13)


def test_survival_from_zero_matches_tau0_oracle():
    prof = kw.survival_profile(ssrw(), 0, 80)
    for n in range(1, 81):
        assert prof.survival[n] == pytest.approx(
            oracles.simple_tau0_survival(n), abs=1e-13)


def test_exact_survival_value():
    # x=1, 3 steps: survive iff first step is up, then avoid 0 twice
    assert kw.exact_survival(ssrw(), 1, 3) == Fraction(3, 8)
    assert kw.exact_survival(left23(), 1, 1) == Fraction(1, 3)


def test_exact_layers_agree_with_float_dp():
    for law in (ssrw(), left23(), uniform3()):
        layers, absorbed = kw.exact_killed_layers(law, 2, 30)
        prof = kw.survival_profile(law, 2, 30, snapshots=(10, 30))
        for n in (10, 30):
            surv = sum(layers[n].values(), Fraction(0))
            assert prof.survival[n] == pytest.approx(float(surv), abs=1e-14)
            snap = prof.snapshots[n]
            for site, m in layers[n].items():
                assert snap.at(site) == pytest.approx(float(m), abs=1e-14)
        dead_mass = sum(sum(d.values(), Fraction(0)) for d in absorbed)
        assert prof.absorbed_total() == pytest.approx(
            float(dead_mass), abs=1e-14)


def test_absorption_matches_hitting_time_oracle():
    # left-continuous laws die exactly at 0 from start x only via -1 jumps;
    # the exact-rational ledger localises each death site
    law = left23()
    _, absorbed = kw.exact_killed_layers(law, 2, 24)
    prof = kw.survival_profile(law, 2, 24)
    for k in range(1, 25):
        assert prof.absorbed_mass[k - 1] == pytest.approx(
            float(sum(absorbed[k - 1].values(), Fraction(0))), abs=1e-14)


def test_mass_and_martingale_ledgers():
    for law in LAWS.values():
        prof = kw.survival_profile(law, 3, 500)
        assert prof.mass_error() <= prof.loss[-1] + 1e-12
        assert prof.stopped_value_error() <= 1e-10
        # partial_v is nondecreasing and the loss bound is small
        pv = [prof.partial_v(k) for k in (50, 200, 500)]
        assert pv[0] <= pv[1] + 1e-15 and pv[1] <= pv[2] + 1e-15
        assert prof.loss[-1] <= 1e-12


def test_alive_excess_is_conserved_value():
    # for a centered law E[y; alive] + E[y at death] = start, so the alive
    # part equals start + E[depth at death; dead] up to the loss bound
    prof = kw.survival_profile(ssrw(), 2, 300)
    # ssrw never overshoots: death is exactly at 0, so alive excess = start
    assert prof.alive_excess(300) == pytest.approx(2.0, abs=1e-12)
    prof23 = kw.survival_profile(left23(), 2, 300)
    depth = prof23.absorbed_depth.sum()
    assert prof23.alive_excess(300) == pytest.approx(2.0 + depth, abs=1e-10)


def test_window_too_small_raises():
    with pytest.raises(WindowTooSmall):
        kw.survival_profile(ssrw(), 1, 400, window=3)


def test_nonlattice_rejected():
    law = step_law([(-1.5, "1/2"), (1.5, "1/2")])
    with pytest.raises(NonLattice):
        kw.survival_profile(law, 1, 10)


def test_conditional_pmf_normalised_and_positive_support():
    pmf = kw.conditional_pmf(left23(), 1, 400)
    assert pmf.mass == pytest.approx(1.0, abs=1e-12)
    assert pmf.offset >= 1
    assert all(p >= 0.0 for p in pmf.probs)


def test_boundary_spec_flooring_and_envelope():
    b = kw.BoundarySpec.from_callable(lambda k: 0.5 * math.sqrt(k), 16)
    assert b.remarks and "floored" in b.remarks[0]
    assert b.values[0] == 0 and b.values[4] == 1  # floor(0.5*sqrt(5)) = 1
    env = b.envelope()
    assert np.all(np.diff(env) >= 0)
    assert b.gmax(16) == env[-1]
    const = kw.BoundarySpec.constant(-3, 8)
    assert const.values == (-3,) * 8 and const.gmax(8) == 3


def test_moving_boundary_ordering():
    # lowering the boundary can only help survival
    n = 200
    low = kw.moving_boundary_profile(
        ssrw(), kw.BoundarySpec.constant(-3, n), start=1)
    flat = kw.survival_profile(ssrw(), 1, n)
    assert np.all(low.survival[1:] >= flat.survival[1:] - 1e-15)
    # along g(k) = k only the all-up path survives
    hot = kw.moving_boundary_profile(
        ssrw(), kw.BoundarySpec.from_callable(lambda k: k, n), start=1)
    for k in (1, 2, 5, 10):
        assert hot.survival[k] == pytest.approx(2.0 ** -k, abs=1e-15)
    # one notch higher and nothing survives the first step
    dead = kw.moving_boundary_profile(
        ssrw(), kw.BoundarySpec.from_callable(lambda k: k + 1, 4), start=1)
    assert dead.survival[1] == 0.0


def test_fkg_and_domination_small_horizon():
    for law in LAWS.values():
        assert kw.fkg_gap(law, 50, x=1) <= 1e-12
        assert kw.domination_gap(law, 2, 50) <= 1e-12
    b = kw.BoundarySpec.from_callable(lambda k: -math.sqrt(k), 50)
    assert kw.fkg_gap(ssrw(), 50, boundary=b) <= 1e-12


def test_fkg_gap_argument_check():
    with pytest.raises(ValueError):
        kw.fkg_gap(ssrw(), 10)
    with pytest.raises(ValueError):
        kw.fkg_gap(ssrw(), 10, x=1,
                   boundary=kw.BoundarySpec.constant(0, 10))


def test_smoothing_deltas():
    # by hand for the lazy three-point law: sup shift of one extra step
    assert kw.smoothing_delta(uniform3(), 1) == pytest.approx(
        1.0 / 9.0, abs=1e-15)
    ds = kw.smoothing_deltas(ssrw(), [4, 16, 64])
    assert ds[4] > ds[16] > ds[64] > 0.0
    # parity flip keeps the sup near the central weight, order 0.4/sqrt(j)
    assert ds[64] <= 0.5 / math.sqrt(64)


def test_partial_v_brackets_harmonic_value():
    # for ssrw V(x) = x exactly; the DP bracket must contain it
    x, n = 4, 2000
    v_part, alive = kw.partial_v(ssrw(), x, n)
    prof = kw.survival_profile(ssrw(), x, n)
    tail = prof.survival[n]
    assert v_part + x * tail <= 4.0 + 1e-10
    assert v_part + (x + 0.0) * tail <= 4.0 <= v_part + alive + 1e-10


def test_local_limit_error_decays():
    e100, _ = kw.local_limit_error(ssrw(), 1, 100)
    e400, _ = kw.local_limit_error(ssrw(), 1, 400)
    assert 0.0 < e400 < e100


def test_csv_layout():
    prof = kw.survival_profile(ssrw(), 1, 4)
    buf = io.StringIO()
    kw.profile_to_csv(prof, buf)
    lines = buf.getvalue().split("\n")
    assert lines[0] == "n,survival,absorbed,E_partial_V,U_g,loss_bound"
    row3 = lines[3].split(",")
    assert row3[0] == "3" and float(row3[1]) == 0.375
    assert "." in row3[1] and ";" not in buf.getvalue()


def test_snapshot_mass_accounting():
    prof = kw.survival_profile(left23(), 1, 120, snapshots=(60, 120))
    for k in (60, 120):
        assert prof.snapshots[k].mass == pytest.approx(
            prof.survival[k], abs=1e-13)
    assert prof.final.mass == pytest.approx(prof.survival[120], abs=1e-13)
