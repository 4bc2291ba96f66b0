"""Harmonic function estimates and the superharmonic majorant."""

import math

import numpy as np
import pytest

from fluctlab import harmonic
from fluctlab.errors import NonCentered, SuperharmonicityViolated
from fluctlab.steplaw import left23, ssrw, step_law, uniform3

LAWS = {"ssrw": ssrw(), "left23": left23(), "uniform3": uniform3()}


def minus2_law():
    return step_law([(-2, "1/4"), (0, "1/4"), (1, "1/2")])


def drifted_law():
    return step_law([(-1, "3/5"), (1, "2/5")])


def test_tail_functions_closed_forms():
    t = harmonic.tail_functions(left23())
    assert t.a(0.0) == pytest.approx(2 / 3, abs=1e-15)
    assert t.a(0.5) == pytest.approx(1 / 3, abs=1e-15)
    assert t.a(1.0) == 0.0
    assert t.a_up(0.0) == pytest.approx(2 / 3, abs=1e-15)
    assert t.a_up(1.5) == pytest.approx(1 / 6, abs=1e-15)
    assert t.b(0.0) == pytest.approx(1 / 3, abs=1e-15)
    assert t.m(1.0) == pytest.approx(1 / 9, abs=1e-15)
    assert t.m(5.0) == t.m(1.0)   # saturates past the deepest jump
    assert t.cdf_at(-1.0) == pytest.approx(2 / 3, abs=1e-15)
    assert t.cdf_at(2.0) == 1.0


def test_tail_functions_require_centering():
    with pytest.raises(NonCentered):
        harmonic.tail_functions(drifted_law())


def test_majorant_constants():
    expect = {"ssrw": (8.0, 1.0, 3.0), "left23": (6.0, 1.0, 3.0),
              "uniform3": (12.0, 1.0, 3.0)}
    for name, law in LAWS.items():
        w = harmonic.build_majorant(law)
        A, x0, R = expect[name]
        assert w.A == pytest.approx(A, abs=1e-12), name
        assert w.x0 == pytest.approx(x0, abs=1e-12), name
        assert w.R == pytest.approx(R, abs=1e-12), name
    deep = harmonic.build_majorant(minus2_law())
    assert deep.A == pytest.approx(4.0, abs=1e-12)
    assert deep.x0 == pytest.approx(2.0, abs=1e-12)
    assert deep.R == pytest.approx(6.0, abs=1e-12)


def test_majorant_shape():
    w = harmonic.build_majorant(ssrw())
    assert w(-1.0) == 0.0
    assert w(0.0) == pytest.approx(w.R, abs=1e-15)
    xs = np.arange(0.0, 10.0, 0.5)
    vals = np.array([w(x) for x in xs])
    assert np.all(np.diff(vals) > 0)           # strictly increasing
    assert np.all(vals >= xs)                  # dominates the identity
    assert vals[-1] - xs[-1] <= w.A * (1 / 6) + w.R + 1e-12


def test_superharmonic_margin_nonpositive():
    grid = np.concatenate([np.arange(0.0, 40.0, 0.25), [100.0, 1000.0]])
    for name, law in LAWS.items():
        m = harmonic.superharmonic_margin(law, grid, strict=True)
        assert m <= 1e-10, name
    assert harmonic.superharmonic_margin(minus2_law(), grid,
                                         strict=True) <= 1e-10


def test_broken_majorant_detected():
    bad = harmonic.Majorant(ssrw(), A=0.05, x0=1.0, R=0.0)
    with pytest.raises(SuperharmonicityViolated):
        harmonic.superharmonic_margin(ssrw(), [0.0, 1.0, 2.0], bad,
                                      strict=True)
    assert harmonic.superharmonic_margin(ssrw(), [0.0], bad) > 0.0


def test_estimate_v_structural_route():
    v0, w0 = harmonic.estimate_v(ssrw(), 0)
    assert (v0, w0) == (0.5, 0.0)
    assert harmonic.estimate_v(ssrw(), 5) == (5.0, 0.0)
    assert harmonic.estimate_v(left23(), 0) == (2 / 3, 0.0)
    assert harmonic.estimate_v(left23(), 7) == (7.0, 0.0)
    assert harmonic.estimate_v(uniform3(), 0) == (1 / 3, 0.0)
    with pytest.raises(ValueError):
        harmonic.estimate_v(ssrw(), -1)
    with pytest.raises(NonCentered):
        harmonic.estimate_v(drifted_law(), 1)


def test_estimate_v_dp_route_brackets():
    law = minus2_law()
    v_a, w_a = harmonic.estimate_v(law, 2, horizon=2000)
    v_b, w_b = harmonic.estimate_v(law, 2, horizon=8000)
    assert w_a > 0.0 and w_b > 0.0
    assert w_b < w_a                       # longer horizon, tighter bracket
    assert v_a >= 2.0 and v_b >= 2.0       # depth only adds
    assert abs(v_a - v_b) <= w_a + w_b


def test_structural_h_and_flux():
    h = harmonic.structural_h(ssrw())
    assert h(0.0) == 1.0 and h(5.0) == 10.0 and h(-2.0) == 0.0
    for law in LAWS.values():
        assert harmonic.boundary_flux(law) == pytest.approx(1.0, abs=1e-14)
    # drifted: flux = E[X^+] / P(X = -1) < 1
    assert harmonic.boundary_flux(drifted_law()) == pytest.approx(
        2 / 3, abs=1e-14)
    with pytest.raises(ValueError):
        harmonic.structural_h(minus2_law())


def test_harmonicity_residuals_vanish_off_boundary():
    xs = range(1, 80)
    for name, law in LAWS.items():
        res = harmonic.harmonicity_residuals(law, xs)
        assert max(abs(r) for r in res.values()) <= 1e-13, name


def test_uniform_bound_report():
    rep = harmonic.uniform_bound_report(ssrw(), [1, 2, 5], [10, 100, 400])
    assert rep["worst_margin"] >= -1e-12
    assert all(m >= -1e-12 for m in rep["margins"].values())
    assert 0.0 < rep["c_sqrt"] < 2.0
    assert rep["c_boundary"] <= 1.0 + 1e-12
