"""Harmonic functions of the killed walk and superharmonic majorants.

V(x) = x + E[depth at absorption] is the canonical harmonic function of the
walk killed on (-inf, 0]; H = V / V(0) is its renewal normalisation.  The
module provides exact structural values where the law permits (only
downward jump -1: no overshoot, so V(x) = x for integer x >= 1 and V(0) =
P(X = -1)), certified DP brackets otherwise, and an explicitly constructed
superharmonic majorant W used for uniform survival bounds.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import NonCentered, SuperharmonicityViolated
from .killedwalk import survival_profile
from .steplaw import Pmf, StepLaw, unconditional_pmf


def _require_centered(law: StepLaw, tol: float = 1e-12) -> None:
    if abs(law.mean) > tol:
        raise NonCentered(f"law has mean {law.mean:.3e}")


@dataclass(frozen=True)
class TailFunctions:
    """Closed-form potential pieces of the downward tail, as functions of
    a real x >= 0:

      a(x) = E (X + x)^-            (linear pieces)
      a_up(x) = E (X - x)^+          (mirror, for the upward tail)
      b(x) = (1/2) E ((X + x)^-)^2   (quadratic pieces)
      m(x) = (1/6) E [ (X^-)^3 - ((X + x)^-)^3 ]  (cubic pieces, increasing)

    All are finite sums over the atoms, exact up to float rounding.
    """

    law: StepLaw

    def a(self, x: float) -> float:
        return sum(p * max(0.0, -v - x)
                   for v, p in zip(self.law.values, self.law.probs) if v < 0)

    def a_up(self, x: float) -> float:
        return sum(p * max(0.0, v - x)
                   for v, p in zip(self.law.values, self.law.probs) if v > 0)

    def b(self, x: float) -> float:
        return 0.5 * sum(p * max(0.0, -v - x) ** 2
                         for v, p in zip(self.law.values, self.law.probs)
                         if v < 0)

    def m(self, x: float) -> float:
        acc = 0.0
        for v, p in zip(self.law.values, self.law.probs):
            if v < 0:
                acc += p * ((-v) ** 3 - max(0.0, -v - x) ** 3)
        return acc / 6.0

    def cdf_at(self, x: float) -> float:
        """P(X <= x)."""
        return sum(p for v, p in zip(self.law.values, self.law.probs)
                   if v <= x)


def tail_functions(law: StepLaw) -> TailFunctions:
    _require_centered(law)
    return TailFunctions(law)


@dataclass(frozen=True)
class Majorant:
    """Superharmonic majorant W(x) = x + A m(x) + R of the killed walk.

    The one-step defect E[W(x + X); x + X > 0] - W(x) is nonpositive for
    every x >= 0; W >= max(x, R) and W(x) - x is bounded, so W certifies
    uniform survival bounds at the cost of constants only.
    """

    law: StepLaw
    A: float
    x0: float
    R: float

    def __call__(self, x: float) -> float:
        if x < 0:
            return 0.0
        t = TailFunctions(self.law)
        return x + self.A * t.m(x) + self.R

    def defect(self, x: float) -> float:
        """E[W(x + X); x + X > 0] - W(x) at a single point."""
        e = sum(p * self(x + v)
                for v, p in zip(self.law.values, self.law.probs) if x + v > 0)
        return e - self(x)


def build_majorant(law: StepLaw) -> Majorant:
    """Construct the majorant constants from the potential pieces.

    A = 2 / b(0) makes the quadratic gain dominate the linear loss; x0 is
    where the gain has decayed to half, 2 A b(x0/2) = 1; the offset R is
    3 a(0) / F(-x0) when the downward tail at x0 carries mass, else 3 x0.
    For the simple symmetric walk this gives A = 8, x0 = 1, R = 3.
    """
    t = tail_functions(law)
    b0 = t.b(0.0)
    if b0 <= 0.0:
        raise ValueError("law has no downward mass")
    A = 2.0 / b0

    # 2 A b(y) is continuous, decreasing, = 4 at y = 0, -> 0; bisect for
    # 2 A b(x0 / 2) = 1
    lo, hi = 0.0, 2.0 * -law.min_step
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if 2.0 * A * t.b(mid / 2.0) > 1.0:
            lo = mid
        else:
            hi = mid
    x0 = 0.5 * (lo + hi)

    f_tail = t.cdf_at(-x0)
    if f_tail > 0.0:
        R = 3.0 * t.a(0.0) / f_tail
    else:
        R = 3.0 * x0
    return Majorant(law, A, x0, R)


def superharmonic_margin(law: StepLaw, xs, majorant: Majorant | None = None,
                         *, strict: bool = False) -> float:
    """Largest one-step defect of W over the grid; superharmonicity means
    the result is <= 0 (up to float noise).  With strict=True a positive
    margin raises SuperharmonicityViolated."""
    w = build_majorant(law) if majorant is None else majorant
    worst = -math.inf
    for x in xs:
        if x < 0:
            continue
        worst = max(worst, w.defect(float(x)))
    if strict and worst > 1e-10:
        raise SuperharmonicityViolated(f"defect {worst:.3e} > 0 on grid")
    return worst


def estimate_v(law: StepLaw, x: int, *, horizon: int = 4000):
    """(value, certified half-width) bracket for V(x) = x + E[absorption
    depth].

    Laws whose only downward jump is -1 admit the exact structural answer
    with zero width: no overshoot is possible, V(x) = x for x >= 1 and
    V(0) = P(X = -1).  Otherwise the DP partial sum brackets V between
    x + depth(horizon) and the same plus D P(tau > horizon), D the deepest
    jump.
    """
    _require_centered(law)
    if x < 0:
        raise ValueError("x must be >= 0")
    if law.min_step == -1:
        return (float(x) if x >= 1 else law.prob_of(-1)), 0.0
    prof = survival_profile(law, x, horizon)
    lo = x + float(prof.absorbed_depth.sum())
    d_max = -law.min_step
    width = d_max * float(prof.survival[-1]) + float(prof.loss[-1]) * (1 + d_max)
    return lo + 0.5 * width, 0.5 * width


def structural_h(law: StepLaw):
    """Renewal-normalised harmonic function H = V / V(0) for laws with
    downward jumps of -1 only: H(x) = x / P(X = -1) for x >= 1, H(0) = 1."""
    if law.min_step != -1:
        raise ValueError("structural form needs the downward jump -1")
    q = law.prob_of(-1)

    def h(x: float) -> float:
        if x <= 0:
            return 1.0 if x == 0 else 0.0
        return x / q

    return h


def harmonicity_residuals(law: StepLaw, xs, h=None) -> dict:
    """r(x) = E[h(x + X); x + X > 0] - h(x) over the grid.

    For mean-zero laws with downward jump -1 and h = V/V(0) the residual is
    exactly 0 for x >= 1.  h(0) is not part of the harmonic system; the
    informative quantity there is the boundary flux, see boundary_flux.
    """
    h = structural_h(law) if h is None else h
    out = {}
    for x in xs:
        e = sum(p * h(x + v)
                for v, p in zip(law.values, law.probs) if x + v > 0)
        out[x] = e - h(x)
    return out


def boundary_flux(law: StepLaw, h=None) -> float:
    """E[h(X); X > 0]: the one-step mass h pushes off the boundary.  Equals
    1 for mean-zero laws with downward jump -1 (h = V/V(0)); for a drifted
    law it drops to E[X^+] / P(X = -1)."""
    h = structural_h(law) if h is None else h
    return sum(p * h(v) for v, p in zip(law.values, law.probs) if v > 0)


def uniform_bound_report(law: StepLaw, xs, ns, h=None) -> dict:
    """Check P(tau_x > n) <= H(x) / E[H(S(n)); S(n) > 0] over a grid.

    The bound is exact (monotone H plus the conditional-law domination),
    so violations beyond DP noise indicate a broken H.  Returns per-n
    margins and the fitted constants of the two asymptotic bound shapes
    C1 V(x)/sqrt(n) and C2 H(x) P(tau_0 > n).
    """
    h = structural_h(law) if h is None else h
    n_max = max(ns)
    margins = {}
    c1 = 0.0
    c2 = 0.0
    prof0 = survival_profile(law, 0, n_max)
    for x in xs:
        prof = survival_profile(law, x, n_max)
        hx = h(x) if x >= 1 else 1.0
        for n in ns:
            free = unconditional_pmf(law, n)
            denom = sum(h(y) * free.at(y)
                        for y in range(1, free.support_end))
            surv = float(prof.survival[n])
            margins[(x, n)] = hx / denom - surv
            v0 = law.prob_of(-1) if law.min_step == -1 else 1.0
            vx = hx * v0
            c1 = max(c1, surv * math.sqrt(n) / vx)
            c2 = max(c2, surv / (hx * float(prof0.survival[n])))
    return {"margins": margins, "c_sqrt": c1, "c_boundary": c2,
            "worst_margin": min(margins.values())}
