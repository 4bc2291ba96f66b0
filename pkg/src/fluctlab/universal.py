"""Triangular-array diagnostics for first passage under moving boundaries.

The point of this module is the gap between the central limit theorem and
boundary universality: a sequence can satisfy Lindeberg's condition (so its
normalised sums are asymptotically normal) while its rate of jumps past the
diffusive scale still diverges, which is what first-passage asymptotics
under a boundary are sensitive to.  The diagnostics below measure exactly
that rate, for the marginal counterexample family, for bounded iid steps
(rate vanishes) and for iid Cauchy steps (rate diverges polynomially).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _backend
from .errors import TooFewSurvivors
from .steplaw import StepLaw, step_law


class IidSequence:
    """Constant-law step sequence."""

    def __init__(self, law: StepLaw):
        self.base = law

    def law(self, k: int) -> StepLaw:
        return self.base

    def variance_sum(self, n: int) -> float:
        return n * self.base.variance

    def upcross_probs(self, n: int, eps: float = 0.5) -> np.ndarray:
        """P(X_k > eps sqrt(k)) for k = 1..n."""
        thr = eps * np.sqrt(np.arange(1, n + 1, dtype=np.float64))
        vals = np.asarray(self.base.values, dtype=np.float64)
        probs = np.asarray(self.base.probs)
        return (vals[None, :] > thr[:, None]) @ probs

    def truncated_second_moment(self, n: int, t: float) -> float:
        """sum_k E[X_k^2; |X_k| > t]."""
        vals = np.asarray(self.base.values, dtype=np.float64)
        probs = np.asarray(self.base.probs)
        return float(n * ((vals ** 2) * probs)[np.abs(vals) > t].sum())

    def mc_rows(self, n: int):
        vals = np.asarray(self.base.values, dtype=np.float64)
        cdf = np.cumsum(self.base.probs)
        cdf[-1] = 1.0
        return (np.tile(vals, (n, 1)), np.tile(cdf, (n, 1)))


class MarginalJumpSequence:
    """Unit-variance family with a vanishing big jump: step k takes
    +-sqrt(k) with probability p_k/2 each, p_k = 1/(k log(k+2)), and
    +-a_k with probability (1-p_k)/2 each, a_k chosen to keep the variance
    at 1.  Satisfies Lindeberg yet its diffusive-scale jump rate grows like
    (1/2) log log n.
    """

    @staticmethod
    def _pa(ks: np.ndarray):
        p = 1.0 / (ks * np.log(ks + 2.0))
        a = np.sqrt((1.0 - ks * p) / (1.0 - p))
        return p, a

    def law(self, k: int) -> StepLaw:
        p, a = self._pa(np.array([float(k)]))
        p, a = float(p[0]), float(a[0])
        r = math.sqrt(float(k))
        if a == r:
            return step_law([(-r, 0.5), (r, 0.5)], kind="real")
        return step_law([(-r, p / 2), (-a, (1 - p) / 2), (a, (1 - p) / 2),
                         (r, p / 2)], kind="real")

    def variance_sum(self, n: int) -> float:
        return float(n)

    def upcross_probs(self, n: int, eps: float = 0.5) -> np.ndarray:
        ks = np.arange(1, n + 1, dtype=np.float64)
        p, a = self._pa(ks)
        thr = eps * np.sqrt(ks)
        out = np.where(np.sqrt(ks) > thr, p / 2, 0.0)
        out += np.where(a > thr, (1.0 - p) / 2, 0.0)
        return out

    def truncated_second_moment(self, n: int, t: float) -> float:
        ks = np.arange(1, n + 1, dtype=np.float64)
        p, a = self._pa(ks)
        acc = np.where(np.sqrt(ks) > t, ks * p, 0.0)
        acc += np.where(a > t, a * a * (1.0 - p), 0.0)
        return float(acc.sum())

    def mc_rows(self, n: int):
        ks = np.arange(1, n + 1, dtype=np.float64)
        p, a = self._pa(ks)
        r = np.sqrt(ks)
        vals = np.column_stack([-r, -a, a, r])
        probs = np.column_stack([p / 2, (1 - p) / 2, (1 - p) / 2, p / 2])
        cdf = np.cumsum(probs, axis=1)
        cdf[:, -1] = 1.0
        return vals, cdf


class CauchySequence:
    """Iid standard Cauchy steps: no variance, the walk scale is n not
    sqrt(n), and the diffusive-scale jump rate diverges like sqrt(n).  Used
    as the heavy-tail contrast for the diagnostics."""

    def upcross_probs(self, n: int, eps: float = 0.5) -> np.ndarray:
        thr = eps * np.sqrt(np.arange(1, n + 1, dtype=np.float64))
        return 0.5 - np.arctan(thr) / math.pi

    def variance_sum(self, n: int) -> float:
        return math.inf


@dataclass(frozen=True)
class LindebergReport:
    """Lindeberg functional L_n(eps) = (1/B_n^2) sum_k E[X_k^2;
    |X_k| > eps B_n] at a fixed horizon, and the self-consistent threshold
    eps_n = inf{eps > 0: L_n(eps) <= eps}.  eps_n -> 0 is equivalent to the
    classical condition holding at every fixed eps."""

    n: int
    b_sq: float
    eps_star: float

    def holds_classically(self, eps: float, level: float) -> bool:
        return self.eps_star <= max(eps, level)


def lindeberg_function(seq, n: int, eps: float) -> float:
    b_sq = seq.variance_sum(n)
    return seq.truncated_second_moment(n, eps * math.sqrt(b_sq)) / b_sq


def lindeberg_report(seq, n: int) -> LindebergReport:
    b_sq = seq.variance_sum(n)
    lo, hi = 0.0, 1.0
    while lindeberg_function(seq, n, hi) > hi:
        hi *= 2.0
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if lindeberg_function(seq, n, mid) > mid:
            lo = mid
        else:
            hi = mid
    return LindebergReport(n=n, b_sq=b_sq, eps_star=hi)


@dataclass(frozen=True)
class DivergenceReport:
    """Cumulative diffusive-scale jump rate S(N) = sum_{k<=N}
    P(X_k > eps sqrt(k)) at the requested checkpoints, plus a fit of S
    against log log N (slope > 0 certifies divergence at iterated-log
    speed)."""

    eps: float
    checkpoints: tuple
    values: tuple
    slope: float
    intercept: float

    def ratio(self) -> float:
        return self.values[-1] / self.values[0]


def divergence_diagnostic(seq, checkpoints=(10 ** 3, 10 ** 6),
                          eps: float = 0.5) -> DivergenceReport:
    checkpoints = tuple(int(c) for c in checkpoints)
    n_max = max(checkpoints)
    terms = seq.upcross_probs(n_max, eps)
    cum = np.cumsum(terms)
    values = tuple(float(cum[c - 1]) for c in checkpoints)

    # fit S(N) ~ slope * log log N + intercept on a geometric grid
    grid = np.unique(np.geomspace(min(checkpoints), n_max, 24).astype(np.int64))
    xs = np.log(np.log(grid.astype(np.float64)))
    ys = cum[grid - 1]
    slope, intercept = np.polyfit(xs, ys, 1)
    return DivergenceReport(eps=eps, checkpoints=checkpoints, values=values,
                            slope=float(slope), intercept=float(intercept))


def wilson_interval(successes: int, trials: int, z: float = 1.96):
    """Score interval for a binomial proportion."""
    if trials <= 0:
        raise ValueError("need at least one trial")
    p = successes / trials
    denom = 1.0 + z * z / trials
    centre = (p + z * z / (2 * trials)) / denom
    half = (z / denom) * math.sqrt(p * (1 - p) / trials
                                   + z * z / (4 * trials * trials))
    return max(0.0, centre - half), min(1.0, centre + half)


@dataclass(frozen=True)
class PassageEstimate:
    n: int
    trials: int
    survivors: int
    p_hat: float
    ci_lo: float
    ci_hi: float
    ug_hat: float
    endpoints: np.ndarray


def simulate_passage(seq, boundary, n: int, trials: int, *, seed: int,
                     stream: int = 1, z: float = 1.96,
                     keep_endpoints: bool = True) -> PassageEstimate:
    """Monte Carlo estimate of P(T_g > n) for the step sequence killed when
    S(k) <= g(k); g may be real-valued (no flooring in simulation).

    Returns the Wilson interval for the survival probability and the
    plug-in estimate of E[S(n) - g(n); T_g > n].
    """
    vals, cdfs = seq.mc_rows(n)
    thr = np.asarray([float(boundary(k)) for k in range(1, n + 1)])
    exit_step, endpoint = _backend.mc_walk(seed, stream, 0, trials, vals,
                                           cdfs, thr, 0.0)
    alive = exit_step == n + 1
    surv = int(alive.sum())
    p_hat = surv / trials
    lo, hi = wilson_interval(surv, trials, z)
    ug = float((endpoint[alive] - thr[-1]).sum() / trials)
    eps = endpoint[alive] if keep_endpoints else np.empty(0)
    return PassageEstimate(n=n, trials=trials, survivors=surv, p_hat=p_hat,
                           ci_lo=lo, ci_hi=hi, ug_hat=ug, endpoints=eps)


def ks_rayleigh_sample(endpoints: np.ndarray, scale: float,
                       min_survivors: int = 100) -> float:
    """KS distance between the scaled survivor endpoints and the Rayleigh
    law (the conditioned-endpoint limit)."""
    from .oracles import ks_distance_sample, rayleigh_cdf
    if len(endpoints) < min_survivors:
        raise TooFewSurvivors(
            f"{len(endpoints)} survivors < {min_survivors}")
    return ks_distance_sample(endpoints / scale, rayleigh_cdf)


def ug_slow_variation(law: StepLaw, boundary, n: int):
    """Compare the boundary overshoot mean U_g at horizon n and at
    m = floor(n / log n): the theorem needs U_g to vary slowly along this
    pair.  Returns (statistic |U(n)/U(m) - 1|, m, U(n), U(m))."""
    from .killedwalk import BoundarySpec, moving_boundary_profile
    m = int(n / math.log(n))
    spec = boundary if isinstance(boundary, BoundarySpec) \
        else BoundarySpec.from_callable(boundary, n)
    prof = moving_boundary_profile(law, spec, n)
    u_n = prof.alive_excess(n)
    u_m = prof.alive_excess(m)
    return abs(u_n / u_m - 1.0), m, u_n, u_m


def passage_tail_ratio(law: StepLaw, boundary, ns):
    """B_n P(T_g > n) / (sqrt(2/pi) U_g(B_n^2)) over the horizons; the
    universality statement says this tends to 1."""
    from .killedwalk import BoundarySpec, moving_boundary_profile
    n_max = max(ns)
    spec = boundary if isinstance(boundary, BoundarySpec) \
        else BoundarySpec.from_callable(boundary, n_max)
    prof = moving_boundary_profile(law, spec, n_max)
    sigma = math.sqrt(law.variance)
    out = {}
    for n in ns:
        b_n = sigma * math.sqrt(n)
        u = prof.alive_excess(n)
        out[n] = b_n * float(prof.survival[n]) / (math.sqrt(2.0 / math.pi) * u)
    return out
