"""Closed-form reference values for the simple symmetric walk and the
Gaussian limit laws.

Everything in this module is an independent route: ballot-style reflection
counts, first-passage pmfs, and limit-law densities evaluated from explicit
formulas.  The dynamic-programming and series machinery elsewhere is tested
against these, never the other way around.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .errors import NotLeftContinuous
from .steplaw import StepLaw, unconditional_pmf

SQRT_2_OVER_PI = math.sqrt(2.0 / math.pi)

# Exact integer binomials below this k, log-gamma above.  The switchover is
# validated to 1e-13 relative in the tests.
_EXACT_BINOM_LIMIT = 30


def central_binom_weight(k: int) -> float:
    """C(2k, k) * 2^(-2k), exact for small k, log-gamma for large k."""
    if k < 0:
        raise ValueError("k must be >= 0")
    if k <= _EXACT_BINOM_LIMIT:
        return float(Fraction(math.comb(2 * k, k), 4**k))
    return math.exp(math.lgamma(2 * k + 1) - 2 * math.lgamma(k + 1)
                    - 2 * k * math.log(2.0))


def ssrw_pmf(n: int, z: int) -> float:
    """P(S(n) = z) for the simple symmetric walk."""
    if (n + z) % 2 != 0 or abs(z) > n:
        return 0.0
    k = (n + z) // 2
    if n <= 2 * _EXACT_BINOM_LIMIT:
        return float(Fraction(math.comb(n, k), 2**n))
    return math.exp(math.lgamma(n + 1) - math.lgamma(k + 1)
                    - math.lgamma(n - k + 1) - n * math.log(2.0))


def simple_refl_pmf(x: int, y: int, n: int) -> float:
    """Killed-walk pmf by reflection: P(x + S(n) = y, no visit to <= 0),
    for the simple symmetric walk, x, y >= 1."""
    if x < 1 or y < 1:
        raise ValueError("reflection formula needs x, y >= 1")
    return ssrw_pmf(n, y - x) - ssrw_pmf(n, y + x)


def simple_refl_tail(x: int, y: int, n: int) -> float:
    """P(x + S(n) >= y, no visit to <= 0) = P(S(n) in [y-x, y+x)) for the
    simple symmetric walk.  y = 1 gives the survival probability."""
    if x < 1:
        raise ValueError("reflection formula needs x >= 1")
    return sum(ssrw_pmf(n, z) for z in range(y - x, y + x))


def simple_tau1_pmf(k: int) -> float:
    """P(first visit of SSRW from 1 to 0 takes 2k+1 steps)
    = C(2k,k) / ((k+1) 2^(2k+1))."""
    return central_binom_weight(k) / (2.0 * (k + 1))


def simple_tau0_survival(n: int) -> float:
    """P(the SSRW started at 0 stays positive after its first step for n
    steps): 1 at n = 0, C(2k,k) 2^(-2k-1) with k = floor(n/2) otherwise."""
    if n == 0:
        return 1.0
    k = n // 2
    return central_binom_weight(k) / 2.0


def hitting_time_pmf(law: StepLaw, x: int, n: int) -> float:
    """P(first passage from x to <= 0 happens at step n) = (x/n) P(S(n) = -x)
    for left-continuous lattice laws (all downward jumps of size one)."""
    if law.kind != "lattice" or law.min_step < -1:
        raise NotLeftContinuous("closed-form hitting law needs jumps >= -1")
    if x < 1 or n < 1:
        raise ValueError("need x >= 1 and n >= 1")
    return (x / n) * unconditional_pmf(law, n).at(-x)


def tail_predictor(x: float, sigma: float, n: int) -> float:
    """Leading-order survival asymptotic for fixed start: (x/sigma)
    sqrt(2/pi) n^(-1/2)."""
    return (x / sigma) * SQRT_2_OVER_PI / math.sqrt(n)


def crossing_predictor(v: float) -> float:
    """Limit of the survival probability with start v*sigma*sqrt(n):
    sqrt(2/pi) * integral_0^v exp(-u^2/2) du."""
    return SQRT_2_OVER_PI * math.sqrt(math.pi / 2.0) * math.erf(v / math.sqrt(2.0))


def normal_cdf(v: float) -> float:
    return 0.5 * (1.0 + math.erf(v / math.sqrt(2.0)))


def rayleigh_cdf(v: float) -> float:
    """Limit law of (x + S(n)) / (sigma sqrt(n)) given survival."""
    if v <= 0.0:
        return 0.0
    return -math.expm1(-v * v / 2.0)


def rayleigh_tail(v: float) -> float:
    return math.exp(-v * v / 2.0) if v > 0.0 else 1.0


def meander_sq_density(u: float) -> float:
    """Marginal density of the conditioned walk's scaled endpoint under the
    entropic (Doob) limit: sqrt(2/pi) u^2 exp(-u^2/2)."""
    if u <= 0.0:
        return 0.0
    return SQRT_2_OVER_PI * u * u * math.exp(-u * u / 2.0)


def meander_sq_cdf(v: float) -> float:
    """CDF of the density above: erf(v/sqrt(2)) - sqrt(2/pi) v exp(-v^2/2)."""
    if v <= 0.0:
        return 0.0
    return math.erf(v / math.sqrt(2.0)) - SQRT_2_OVER_PI * v * math.exp(-v * v / 2.0)


def doob_kernel_simple(x: int) -> tuple[float, float]:
    """Transition probabilities (up, down) of the SSRW conditioned to stay
    positive: ((x+1)/(2x), (x-1)/(2x)) at state x >= 1."""
    if x < 1:
        raise ValueError("the conditioned walk lives on x >= 1")
    return (x + 1) / (2.0 * x), (x - 1) / (2.0 * x)


@dataclass(frozen=True)
class AsymptoticPrediction:
    """Tagged asymptotic regime with a callable evaluation.

    regime: one of "fixed-x-tail", "scaled-x-crossing", "rayleigh",
    "meander-square".  For the tail regimes __call__ maps n to the predicted
    survival probability; for the limit laws it maps v to the limiting CDF.
    """

    regime: str
    params: dict = field(default_factory=dict)

    def __call__(self, arg: float) -> float:
        if self.regime == "fixed-x-tail":
            return tail_predictor(self.params["x"], self.params["sigma"], int(arg))
        if self.regime == "scaled-x-crossing":
            return crossing_predictor(self.params["v"])
        if self.regime == "rayleigh":
            return rayleigh_cdf(arg)
        if self.regime == "meander-square":
            return meander_sq_cdf(arg)
        raise ValueError(f"unknown regime {self.regime!r}")


def ks_distance_discrete(sites: np.ndarray, weights: np.ndarray, cdf) -> float:
    """Kolmogorov distance between a discrete law (sites ascending, weights
    summing to ~1) and a continuous CDF."""
    cum = np.cumsum(weights)
    f = np.array([cdf(s) for s in sites])
    left = np.abs(f - np.concatenate(([0.0], cum[:-1])))
    right = np.abs(f - cum)
    return float(max(left.max(), right.max()))


def ks_distance_sample(values: np.ndarray, cdf) -> float:
    """One-sample Kolmogorov distance of an empirical sample against a CDF."""
    v = np.sort(np.asarray(values, dtype=np.float64))
    n = len(v)
    f = np.array([cdf(x) for x in v])
    d_plus = np.max(np.arange(1, n + 1) / n - f)
    d_minus = np.max(f - np.arange(0, n) / n)
    return float(max(d_plus, d_minus))
