"""Markov chains with state-dependent zero-mean unit-variance jumps.

Everything the walk theory needs from a chain is carried by a tail majorant
Y of the jump magnitudes: its truncated moment functions a, b, m build a
superharmonic envelope W(x) = x + R + A m(x + R), valid for every kernel
dominated by the same Y once three smallness conditions on R hold.  From W
come the harmonic function V(x) = x - E_x X(tau), survival asymptotics
sqrt(n) P_x(tau > n) -> sqrt(2/pi) V(x), and the conditioned (reweighted)
chain with its u^2 exp(-u^2/2) scaling limit.

Shipped kernel families: the unit walk as a trivial chain, and a
region-switched family alternating a 7-node Gauss-Hermite discretised
normal (floor of the state even) with a symmetric three-point law (odd),
both of conditional variance exactly one.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Mapping

import numpy as np
import scipy.integrate
from scipy.special import expi, expn

from . import _backend
from .errors import (AssumptionViolated, NoValidR, TooFewSurvivors,
                     VUnavailable)
from .oracles import (ks_distance_discrete, ks_distance_sample,
                      meander_sq_cdf, normal_cdf)
from .steplaw import StepLaw, step_law, walk_marginals


# Kernels.

def gauss_hermite_law(nodes: int = 7) -> StepLaw:
    """Standard normal discretised on Gauss-Hermite points.  Moments match
    the normal exactly up to degree 2*nodes - 1, so the mean is 0 and the
    variance 1 to rounding error."""
    x, w = np.polynomial.hermite_e.hermegauss(nodes)
    p = w / w.sum()
    return step_law([(float(v), float(q)) for v, q in zip(x, p)], kind="real")


def three_point_law() -> StepLaw:
    """+-sqrt(3/2) with probability 1/3 each, 0 otherwise: variance 1."""
    r = math.sqrt(1.5)
    return step_law([(-r, "1/3"), (0.0, "1/3"), (r, "1/3")], kind="real")


@dataclass(frozen=True)
class ChainKernel:
    """Jump law per state.

    mode "iid" uses laws[0] everywhere; mode "floor-parity" uses laws[0]
    when floor(x) is even and laws[1] when odd (the regime the stepping
    kernels implement).  family is a label; shipped families carry
    algebraic moment guarantees, "custom" kernels are validated on probe
    grids only.
    """

    mode: str
    laws: tuple
    family: str = "custom"

    def __post_init__(self):
        if self.mode not in ("iid", "floor-parity"):
            raise ValueError(f"unknown kernel mode {self.mode!r}")
        need = 1 if self.mode == "iid" else 2
        if len(self.laws) < need:
            raise ValueError(f"mode {self.mode!r} needs {need} region laws")

    @property
    def is_lattice(self) -> bool:
        return all(l.kind == "lattice" for l in self.laws)

    def law_at(self, x: float) -> StepLaw:
        if self.mode == "iid":
            return self.laws[0]
        return self.laws[int(math.floor(x)) & 1]

    def jump_bound(self) -> float:
        return max(max(abs(v) for v in l.values) for l in self.laws)

    def mc_arrays(self):
        """Padded (values, cdfs, widths, mode) rows for the stepping
        kernels; CDF rows end at exactly 1."""
        width = max(len(l.values) for l in self.laws)
        k = len(self.laws)
        vals = np.zeros((k, width))
        cdfs = np.ones((k, width))
        widths = np.zeros(k, dtype=np.int64)
        for i, l in enumerate(self.laws):
            w = len(l.values)
            widths[i] = w
            vals[i, :w] = l.values
            vals[i, w:] = l.values[-1]
            c = np.cumsum(l.probs)
            c[-1] = 1.0
            cdfs[i, :w] = c
        return vals, cdfs, widths, 0 if self.mode == "iid" else 1


def ssrw_kernel() -> ChainKernel:
    return ChainKernel("iid", (step_law([(-1, "1/2"), (1, "1/2")]),),
                       family="ssrw")


def region_switched_kernel(nodes: int = 7) -> ChainKernel:
    return ChainKernel("floor-parity",
                       (gauss_hermite_law(nodes), three_point_law()),
                       family="region-switched")


def kernel_from_spec(spec: dict) -> ChainKernel:
    """Build a kernel from a config-style description.

    {"family": "ssrw"} and {"family": "region-switched", "nodes": 7} name
    the shipped families; {"family": "custom", "mode": ..., "regions":
    [[(value, prob), ...], ...]} tabulates one atom list per region.
    """
    fam = spec.get("family", "custom")
    if fam == "ssrw":
        return ssrw_kernel()
    if fam == "region-switched":
        return region_switched_kernel(int(spec.get("nodes", 7)))
    if fam != "custom":
        raise ValueError(f"unknown kernel family {fam!r}")
    regions = spec["regions"]
    laws = tuple(step_law([(v, p) for v, p in atoms]) for atoms in regions)
    return ChainKernel(spec["mode"], laws)


# Tail majorant of the jump magnitudes and its moment functions.

def _quad(f, lo: float, hi: float, knots=()) -> float:
    """Adaptive quadrature split at interior knots; returns inf when the
    integral fails to converge (divergent tails must surface as inf, not
    as a garbage finite value).

    An unbounded upper end is handled through y = L + e^t - 1, which turns
    regularly-varying tails into exponentially decaying integrands; quad's
    own infinite-range transform cannot reach full precision on tails with
    logarithmic corrections.
    """
    if hi <= lo:
        return 0.0
    cuts = [lo] + sorted(k for k in knots if lo < k < hi) + [hi]
    total = 0.0
    err = 0.0
    with warnings.catch_warnings():
        warnings.simplefilter("error", scipy.integrate.IntegrationWarning)
        for aa, bb in zip(cuts[:-1], cuts[1:]):
            try:
                if math.isinf(bb):
                    g = (lambda t, base=aa:
                         f(base + math.expm1(t)) * math.exp(t))
                    v, e = scipy.integrate.quad(g, 0.0, 700.0, limit=300,
                                                epsabs=1e-12, epsrel=1e-11)
                else:
                    v, e = scipy.integrate.quad(f, aa, bb, limit=300,
                                                epsabs=1e-12, epsrel=1e-11)
            except scipy.integrate.IntegrationWarning:
                return math.inf
            total += v
            err += e
    if not math.isfinite(total) or err > 1e-6 * max(1.0, abs(total)):
        return math.inf
    return total


class MajorantY:
    """Positive random variable Y dominating every |jump|, described by its
    tail P(Y > y).

    The induced truncated moments (same shapes as the downward-jump
    functions of the iid theory, with Y in place of the jump magnitude):

        a(x) = E (Y - x)+          = integral_x^inf  tail
        b(x) = integral_x^inf a    = E ((Y - x)+)^2 / 2
        m(x) = integral_0^x b      = (E Y^3 - E ((Y - x)+)^3) / 6

    Closed forms may be supplied per function through exact; anything else
    is evaluated by quadrature with knots at tail discontinuities.
    Divergent integrals come back as inf so callers can refuse majorants
    without a finite second moment.
    """

    def __init__(self, tail_fn: Callable[[float], float],
                 upper: float = math.inf, knots=(), exact=None,
                 label: str = "custom"):
        self.tail_fn = tail_fn
        self.upper = upper
        self.knots = tuple(knots)
        self.exact = dict(exact) if exact else {}
        self.label = label
        self._memo: dict = {}

    def _cached(self, key, compute):
        if key not in self._memo:
            self._memo[key] = compute()
        return self._memo[key]

    def tail(self, y: float) -> float:
        return float(self.tail_fn(y))

    def a(self, x: float) -> float:
        if "a" in self.exact:
            return self.exact["a"](x)
        return self._cached(("a", x), lambda: _quad(
            self.tail_fn, x, self.upper, self.knots))

    def b(self, x: float) -> float:
        if "b" in self.exact:
            return self.exact["b"](x)
        return self._cached(("b", x), lambda: _quad(
            lambda y: (y - x) * self.tail_fn(y), x, self.upper, self.knots))

    def m(self, x: float) -> float:
        if "m" in self.exact:
            return self.exact["m"](x)
        if x <= 0.0:
            return 0.0

        def compute():
            head = _quad(lambda y: y * y * self.tail_fn(y), 0.0,
                         min(x, self.upper), self.knots)
            rest = _quad(lambda y: (2.0 * y - x) * self.tail_fn(y), x,
                         self.upper, self.knots)
            return 0.5 * (head + x * rest)

        return self._cached(("m", x), compute)

    def second_moment_above(self, r: float) -> float:
        """E[Y^2; Y > r] (ties resolved strictly, matching the tail)."""
        if "sma" in self.exact:
            return self.exact["sma"](r)

        def compute():
            body = _quad(lambda y: 2.0 * y * self.tail_fn(y), r, self.upper,
                         self.knots)
            return r * r * self.tail(r) + body

        return self._cached(("sma", r), compute)

    def second_moment(self) -> float:
        return self.second_moment_above(0.0)

    def rv_ratio(self, ys) -> dict:
        """tail(2y)/tail(y) on a grid: -> 1/4 diagnoses the index -2
        regular variation the envelope construction leans on."""
        out = {}
        for y in ys:
            t = self.tail(y)
            if t > 0.0:
                out[float(y)] = self.tail(2.0 * y) / t
        return out


def constant_majorant(bound: float) -> MajorantY:
    """Y = bound almost surely; all moment functions in closed form."""
    B = float(bound)
    return MajorantY(
        lambda y: 1.0 if y < B else 0.0,
        upper=B,
        exact={
            "a": lambda x: max(0.0, B - x),
            "b": lambda x: 0.5 * max(0.0, B - x) ** 2,
            "m": lambda x: (B ** 3 - max(0.0, B - max(x, 0.0)) ** 3) / 6.0,
            "sma": lambda r: B * B if r < B else 0.0,
        },
        label=f"constant({B:g})")


def _log_squared_tail(K: float, c: float, label: str) -> MajorantY:
    """Tail certain below K, then c / (y^2 ln^2 y): the minimal decay with
    a finite second moment.

    All moment functions reduce, through u = ln y, to exponential
    integrals, so they are exact; quadrature cannot be trusted here, as
    mass keeps arriving out to scales exp(1/eps) no float can reach.
    Needs K > 1 and c <= K^2 ln^2 K (tail <= 1 past the shoulder).
    """
    if K <= 1.0:
        raise ValueError("log-squared tails need a shoulder above 1")
    if c > K * K * math.log(K) ** 2 * (1.0 + 1e-12):
        raise ValueError("tail exceeds 1 at the shoulder; raise K")
    uK = math.log(K)

    def itail(x):
        # integral_x^inf dy / (y^2 ln^2 y) = integral e^-u / u^2 du
        u = math.log(x)
        return float(expn(2, u)) / u

    def iy(x):
        # integral_x^inf dy / (y ln^2 y) = 1/ln x
        return 1.0 / math.log(x)

    def g(x):
        # antiderivative of 1 / ln^2 y
        u = math.log(x)
        return float(expi(u)) - x / u

    def tail(y):
        if y < K:
            return 1.0
        return c / (y * y * math.log(y) ** 2)

    def a(x):
        if x >= K:
            return c * itail(x)
        return (K - x) + c * itail(K)

    def b(x):
        if x >= K:
            return c * (iy(x) - x * itail(x))
        return 0.5 * (K - x) ** 2 + c * (iy(K) - x * itail(K))

    def two_y(x):
        # integral_x^inf 2 y tail(y) dy
        if x >= K:
            return 2.0 * c * iy(x)
        return (K * K - x * x) + 2.0 * c * iy(K)

    def m(x):
        if x <= 0.0:
            return 0.0
        head = min(x, K) ** 3 / 3.0
        if x > K:
            head += c * (g(x) - g(K))
        rest = two_y(x) - x * a(x)
        return 0.5 * (head + x * rest)

    def sma(r):
        return max(r, 0.0) ** 2 * tail(max(r, 0.0)) + two_y(max(r, 0.0))

    return MajorantY(tail, knots=(K,),
                     exact={"a": a, "b": b, "m": m, "sma": sma},
                     label=label)


def wrapped_majorant(bound: float, c: float = 1.0 / 16.0) -> MajorantY:
    """Certain up to the jump bound (padded to e for a positive log
    scale), then a c / (y^2 ln^2 y) tail.

    Dominates any kernel whose jumps never exceed bound, while keeping a
    genuinely regularly-varying tail of index -2 so the slow-decay
    condition on a holds with substance rather than as 0 >= 0.
    """
    K = max(float(bound), math.e)
    return _log_squared_tail(K, c, f"wrapped({bound:g},{c:g})")


def pareto_log_majorant(c: float = 2.0) -> MajorantY:
    """min(1, c / (y^2 ln^2 y)): index -2 with a logarithmic twist.  The
    second moment is finite but its truncated tail decays only like
    c/ln R, so the radius the envelope needs grows like exp(64 c); large c
    makes the search run off its range, honestly."""
    lo, hi = 1.0 + 1e-9, 10.0 + c
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid * mid * math.log(mid) ** 2 < c:
            lo = mid
        else:
            hi = mid
    return _log_squared_tail(hi, c, f"pareto-log({c:g})")


def inverse_square_majorant() -> MajorantY:
    """min(1, 1/y^2): exactly index -2, but E Y^2 diverges (the closed
    forms below are honest: b and the truncated second moment are inf for
    every argument, so no truncation radius can ever qualify)."""
    def a_exact(x):
        return 2.0 - x if x <= 1.0 else 1.0 / x

    return MajorantY(
        lambda y: min(1.0, 1.0 / (y * y)) if y > 0 else 1.0,
        knots=(1.0,),
        exact={
            "a": a_exact,
            "b": lambda x: math.inf,
            "m": lambda x: math.inf if x > 0 else 0.0,
            "sma": lambda r: math.inf,
        },
        label="inverse-square")


# Kernel validation against the moment and domination assumptions.

@dataclass
class ValidationReport:
    probes: tuple
    moment_failures: list
    domination_failures: list
    caveat: str

    @property
    def ok(self) -> bool:
        return not self.moment_failures and not self.domination_failures

    def raise_if_failed(self) -> None:
        if self.moment_failures:
            x, which, err = self.moment_failures[0]
            raise AssumptionViolated(
                f"jump {which} off by {err:.3e} at state {x}")
        if self.domination_failures:
            x, y, p, t = self.domination_failures[0]
            raise AssumptionViolated(
                f"majorant fails at state {x}, level {y}: "
                f"P(|jump|>y)={p:.6g} > tail={t:.6g}")


DEFAULT_PROBES = (0.0, 0.25, 0.5, 1.0, 1.5, 2.0, 3.5, 5.0, 10.0, 100.0,
                  1000.0)


def kernel_validate(kernel: ChainKernel, majorant: MajorantY,
                    probes=DEFAULT_PROBES, tol: float = 1e-10
                    ) -> ValidationReport:
    """Check the centering/variance assumption and the tail domination
    P(|jump at x| > y) <= P(Y > y) at every probe state.

    Domination is checked just below each atom magnitude, where the jump
    tail is largest against a nonincreasing majorant tail.  Failures are
    listed; raise_if_failed converts the first one to an error.
    """
    moment_bad = []
    dom_bad = []
    for x in probes:
        law = kernel.law_at(x)
        if abs(law.mean) > tol:
            moment_bad.append((x, "mean", abs(law.mean)))
        if abs(law.variance - 1.0) > tol:
            moment_bad.append((x, "variance", abs(law.variance - 1.0)))
        mags = sorted(set(abs(v) for v in law.values if v != 0))
        for g in mags:
            y = g * (1.0 - 1e-12)
            p = sum(pr for v, pr in zip(law.values, law.probs)
                    if abs(v) > y)
            t = majorant.tail(y)
            if p > t + 1e-12:
                dom_bad.append((x, y, p, t))
    caveat = ("" if kernel.family != "custom" else
              "custom kernel: assumptions verified on the probe grid only")
    return ValidationReport(tuple(probes), moment_bad, dom_bad, caveat)


# Superharmonic envelope.

@dataclass(frozen=True)
class ChainW:
    """W(x) = x + R + A m(x + R); supermartingale along the killed chain
    for every kernel dominated by the majorant."""

    majorant: MajorantY
    A: float
    R: float

    def __call__(self, x: float) -> float:
        if x < 0:
            return 0.0
        return x + self.R + self.A * self.majorant.m(x + self.R)

    def excess(self, x: float) -> float:
        """W(x) - x = R + A m(x+R): the certified bound on E_x[-X(tau)]."""
        return self.R + self.A * self.majorant.m(x + self.R)


W_PROBES = (0.0, 0.5, 1.0, 2.0, 5.0, 10.0, 100.0, 1000.0)


def build_chain_W(majorant: MajorantY, *, A: float = 32.0,
                  r_max: float = 2.0 ** 20,
                  probes=W_PROBES) -> ChainW:
    """Smallest truncation radius R (doubling then bisection) satisfying

      (i)   a(x + 2R) >= a(x + R) / 4 at every probe x   (decay no faster
            than index -1, where the drift argument needs it),
      (ii)  E[Y^2; Y > R] <= 1/2,
      (iii) b(R) < 1/64,

    paired with the drift weight A (any A >= 32 works; 32 is the edge).
    Raises NoValidR when the majorant's second moment diverges or no R
    below r_max qualifies.
    """
    if not math.isfinite(majorant.second_moment()):
        raise NoValidR("majorant second moment diverges; "
                       "no truncation radius can satisfy the conditions")

    def ok(r: float) -> bool:
        if majorant.second_moment_above(r) > 0.5:
            return False
        if not majorant.b(r) < 1.0 / 64.0:
            return False
        for x in probes:
            if majorant.a(x + 2.0 * r) < majorant.a(x + r) / 4.0 - 1e-15:
                return False
        return True

    r = 1.0 / 64.0
    while not ok(r):
        r *= 2.0
        if r > r_max:
            raise NoValidR(f"no admissible truncation radius below {r_max:g}")
    lo, hi = r / 2.0, r
    for _ in range(48):
        mid = 0.5 * (lo + hi)
        if ok(mid):
            hi = mid
        else:
            lo = mid
    return ChainW(majorant, float(A), hi)


def drift_check(w: ChainW, kernel: ChainKernel, probes=W_PROBES) -> dict:
    """One-step drift Delta(x) = E[W(x + jump); x + jump > 0] - W(x) at
    each probe, evaluated exactly over the kernel atoms.  Nonpositive
    values certify the supermartingale property pointwise."""
    out = {}
    for x in probes:
        law = kernel.law_at(x)
        e = sum(p * w(x + v)
                for v, p in zip(law.values, law.probs) if x + v > 0)
        out[float(x)] = e - w(x)
    return out


# Harmonic function V(x) = x - E_x X(tau) and survival asymptotics.

@dataclass
class VEstimate:
    x: float
    value: float
    sigma: float        # MC standard error (0 for the exact route)
    trunc: float        # certified half-width from horizon truncation
    method: str
    survivor_fraction: float = 0.0

    @property
    def half_width(self) -> float:
        return 1.96 * self.sigma + self.trunc


def chain_V(kernel: ChainKernel, x: float, *, n_max: int = 10000,
            trials: int = 200000, seed: int = 0, stream: int = 2,
            batch: int = 1 << 18, method: str = "auto") -> VEstimate:
    """Estimate V(x) = x - E_x X(tau) = x + E[absorption depth].

    Lattice iid kernels at integer starts go through the exact walk
    machinery (structural for unit downward jumps, else certified DP).
    Everything else is Monte Carlo: the partial mean over trials absorbed
    by n_max undershoots V by at most bound * P(tau > n_max), bound the
    largest jump, so the midpoint carries that half-width as trunc.
    """
    if method not in ("auto", "dp", "mc"):
        raise ValueError(f"unknown method {method!r}")
    want_dp = (method == "dp" or
               (method == "auto" and kernel.mode == "iid"
                and kernel.is_lattice and float(x).is_integer()))
    if want_dp:
        from .harmonic import estimate_v
        v, width = estimate_v(kernel.laws[0], int(x), horizon=n_max)
        return VEstimate(float(x), v, 0.0, width, "dp")

    vals, cdfs, widths, mode = kernel.mc_arrays()
    bound = kernel.jump_bound()
    tot = 0.0
    tot_sq = 0.0
    surv = 0
    for lo in range(0, trials, batch):
        hi = min(lo + batch, trials)
        exit_step, endpoint = _backend.mc_chain(
            seed, stream, lo, hi, vals, cdfs, widths, mode, float(x),
            n_max, True)
        dead = exit_step <= n_max
        depth = np.where(dead, -endpoint, 0.0)
        tot += float(depth.sum())
        tot_sq += float((depth ** 2).sum())
        surv += int((~dead).sum())
    mean_depth = tot / trials
    var_depth = max(tot_sq / trials - mean_depth ** 2, 0.0)
    p_surv = surv / trials
    half = 0.5 * bound * p_surv
    return VEstimate(float(x), x + mean_depth + half,
                     math.sqrt(var_depth / trials), half, "mc", p_surv)


@dataclass
class SurvivalReport:
    x: float
    n: int
    p_hat: float
    sigma: float
    v: VEstimate
    ratio: float
    ratio_sigma: float
    method: str
    trials: int = 0
    x0: float = 1.0
    delta_n: float = 0.0

    @property
    def in_window(self) -> bool:
        """Inside the validity window [x0, delta_n sqrt(n)] of the tail
        theorem (delta_n defaults to 1/log n)."""
        return self.x0 <= self.x <= self.delta_n * math.sqrt(self.n)

    @property
    def upper_constant(self) -> float:
        """Fitted C in the uniform bound P_x(tau > n) <= C (x+1)/sqrt(n)."""
        return self.p_hat * math.sqrt(self.n) / (self.x + 1.0)


def chain_survival(kernel: ChainKernel, x: float, n: int, *,
                   trials: int = 1000000, seed: int = 0,
                   method: str = "auto", v_horizon: int | None = None,
                   v_trials: int | None = None, x0: float = 1.0,
                   batch: int = 1 << 18) -> SurvivalReport:
    """P_x(tau > n) with the theorem ratio sqrt(n) P / (sqrt(2/pi) V(x)).

    DP route (lattice iid kernels, integer start): survival and V exact up
    to certified widths, no MC error.  MC route: binomial error on the
    survival estimate and the V half-width combine in quadrature into
    ratio_sigma.
    """
    if method not in ("auto", "dp", "mc"):
        raise ValueError(f"unknown method {method!r}")
    use_dp = (method == "dp" or
              (method == "auto" and kernel.mode == "iid"
               and kernel.is_lattice and float(x).is_integer()))
    pref = math.sqrt(2.0 / math.pi)
    delta_n = 1.0 / math.log(n) if n > 1 else 1.0

    if use_dp:
        from .killedwalk import survival_profile
        prof = survival_profile(kernel.laws[0], int(x), n)
        p_hat = float(prof.survival[n])
        v = chain_V(kernel, x, method="dp",
                    n_max=v_horizon or max(n, 4000))
        ratio = math.sqrt(n) * p_hat / (pref * v.value)
        rsig = ratio * (v.half_width / v.value)
        return SurvivalReport(float(x), n, p_hat, 0.0, v, ratio, rsig,
                              "dp", 0, x0, delta_n)

    vals, cdfs, widths, mode = kernel.mc_arrays()
    surv = 0
    for lo in range(0, trials, batch):
        hi = min(lo + batch, trials)
        exit_step, _ = _backend.mc_chain(seed, 1, lo, hi, vals, cdfs,
                                         widths, mode, float(x), n, True)
        surv += int((exit_step == n + 1).sum())
    p_hat = surv / trials
    sigma = math.sqrt(max(p_hat * (1.0 - p_hat), 1e-300) / trials)
    v = chain_V(kernel, x, n_max=v_horizon or 4 * n,
                trials=v_trials or max(trials // 4, 1), seed=seed)
    ratio = math.sqrt(n) * p_hat / (pref * v.value)
    rel = math.sqrt((sigma / max(p_hat, 1e-300)) ** 2
                    + (v.half_width / v.value) ** 2)
    return SurvivalReport(float(x), n, p_hat, sigma, v, ratio,
                          ratio * rel, "mc", trials, x0, delta_n)


def survival_constant_sweep(kernel: ChainKernel, x: float, ns, **kw) -> dict:
    """Fitted upper-bound constant C(n) = sqrt(n) P_x(tau>n) / (x+1)
    across horizons; stability of C over decades is the testable content
    of the uniform bound."""
    return {int(n): chain_survival(kernel, x, int(n), **kw).upper_constant
            for n in ns}


# Conditioned (reweighted) chain.

def _v_lookup(v) -> Callable[[float], float]:
    if callable(v):
        return v
    if isinstance(v, Mapping):
        def look(y):
            try:
                return v[y]
            except KeyError:
                raise VUnavailable(f"harmonic table has no entry for {y!r}")
        return look
    raise TypeError("v must be a callable or a mapping")


def doob_chain_step(kernel: ChainKernel, v, x: float):
    """One transition of the chain conditioned to stay positive: atoms
    (y, p(x,y) v(y) / norm) over alive targets y = x + jump.

    Returns (atoms, residual) with residual = sum p v(y) 1{y>0} - v(x): an
    exactly harmonic v makes it zero, a truncated table leaves exactly the
    harmonicity defect, so normalising by the sum keeps the step a
    probability law either way.
    """
    look = _v_lookup(v)
    law = kernel.law_at(x)
    vx = look(x)
    if vx <= 0.0:
        raise VUnavailable(f"v({x!r}) = {vx!r} is not positive")
    atoms = []
    tot = 0.0
    for j, p in zip(law.values, law.probs):
        y = x + j
        if y > 0:
            wgt = p * look(y)
            atoms.append((y, wgt))
            tot += wgt
    return [(y, wgt / tot) for y, wgt in atoms], tot - vx


def tabulate_v(kernel: ChainKernel, xs, **kw) -> Callable:
    """Interpolated V from chain_V estimates on a grid, linearly extended
    beyond the last node with unit slope (V(x) - x is eventually flat).
    Returns a vectorised callable suitable for the resampling weights."""
    xs = np.asarray(sorted(xs), dtype=np.float64)
    vs = np.array([chain_V(kernel, float(g), **kw).value for g in xs])
    top_gap = vs[-1] - xs[-1]

    def v(y):
        arr = np.asarray(y, dtype=np.float64)
        out = np.where(arr > xs[-1], arr + top_gap,
                       np.interp(arr, xs, vs))
        return np.where(arr <= 0.0, 0.0, out)

    return v


# Exact dynamics of the conditioned unit walk (the lattice reference).

def doob_unit_walk_pmf(x: int, n: int) -> np.ndarray:
    """Exact n-step pmf of the unit walk conditioned to stay positive,
    started at x >= 1; index = site.  Transitions (y+1)/(2y) up and
    (y-1)/(2y) down keep the state positive by construction."""
    if x < 1:
        raise ValueError("start must be >= 1")
    cap = x + int(math.ceil(6.0 * math.sqrt(n + 1))) + 4
    probs = np.zeros(cap + 1)
    probs[x] = 1.0
    sites = np.arange(cap + 1, dtype=np.float64)
    up = np.zeros(cap + 1)
    dn = np.zeros(cap + 1)
    up[1:] = (sites[1:] + 1.0) / (2.0 * sites[1:])
    dn[1:] = (sites[1:] - 1.0) / (2.0 * sites[1:])
    for _ in range(n):
        nxt = np.zeros(cap + 1)
        nxt[2:] += probs[1:-1] * up[1:-1]
        nxt[:-1] += probs[1:] * dn[1:]
        # the cap absorbs its own up-steps; the leak this hides is below
        # the 6-sigma tail of the limit law, far under test tolerances
        nxt[cap] += probs[cap] * up[cap]
        probs = nxt
    return probs


def doob_limit_check(kernel: ChainKernel, x, n: int, *,
                     particles: int = 50000, seed: int = 0, v=None,
                     resample_every: int = 16) -> float:
    """KS distance of the conditioned chain's scaled state X^(n)/sqrt(n)
    from the limit with density sqrt(2/pi) u^2 exp(-u^2/2).

    Unit-step lattice kernels evaluate the conditioned walk exactly;
    everything else is sampled by the resampling scheme below with weights
    from v (default: v(y) = y, the leading term of the harmonic
    function).
    """
    law = kernel.laws[0]
    if (kernel.mode == "iid" and kernel.is_lattice
            and set(law.values) == {-1, 1} and float(x).is_integer()):
        probs = doob_unit_walk_pmf(int(x), n)
        sites = np.arange(len(probs), dtype=np.float64)
        keep = probs > 0
        return ks_distance_discrete(sites[keep] / math.sqrt(n),
                                    probs[keep], meander_sq_cdf)
    if v is None:
        def v(y):
            arr = np.asarray(y, dtype=np.float64)
            return np.maximum(arr, 0.0)
    res = doob_sample_sir(kernel, v, float(x), n, particles=particles,
                          seed=seed, resample_every=resample_every)
    order = np.argsort(res.positions)
    w = res.weights[order]
    return ks_distance_discrete(res.positions[order] / math.sqrt(n),
                                w / w.sum(), meander_sq_cdf)


def conditioned_vs_doob_tv(x: int, k: int, n: int) -> float:
    """Total variation at a fixed step k between the unit walk conditioned
    to survive to a far horizon n and the infinite-horizon conditioning;
    both sides exact, so the decay as n grows is the finite-n content of
    the conditioning limit."""
    from .killedwalk import survival_profile
    from .steplaw import ssrw
    law = ssrw()
    prof = survival_profile(law, x, k, snapshots=(k,))
    layer = prof.snapshots[k]
    sites = layer.sites()
    mass = layer.probs.copy()
    for i, y in enumerate(sites):
        if mass[i] > 0.0 and n > k:
            tail = survival_profile(law, int(y), n - k)
            mass[i] *= float(tail.survival[n - k])
    mass /= mass.sum()
    doob = doob_unit_walk_pmf(x, k)
    width = max(len(doob), int(sites[-1]) + 1)
    da = np.zeros(width)
    da[:len(doob)] = doob
    ca = np.zeros(width)
    ca[sites] = mass
    return 0.5 * float(np.abs(da - ca).sum())


@dataclass
class SirResult:
    positions: np.ndarray
    weights: np.ndarray
    ess_log: list = field(default_factory=list)


def doob_sample_sir(kernel: ChainKernel, v, x: float, n: int, *,
                    particles: int = 50000, seed: int = 0,
                    resample_every: int = 16,
                    min_alive: int = 64) -> SirResult:
    """Sequential importance resampling for the conditioned chain.

    Particles move under the original kernel and die at <= 0; every
    resample_every steps the population is redrawn proportionally to
    v(now)/v(anchor), the accumulated conditioning weight since the last
    refill.  Effective sample size is logged before each refill.  v must
    accept an ndarray.
    """
    rng = np.random.Generator(np.random.Philox(seed))
    pos = np.full(particles, float(x))
    anchor = np.asarray(v(pos), dtype=np.float64).copy()
    ess = []
    for step in range(1, n + 1):
        if kernel.mode == "iid":
            law = kernel.laws[0]
            cdf = np.cumsum(law.probs)
            idx = np.searchsorted(cdf, rng.random(len(pos)), side="right")
            pos = pos + np.asarray(law.values)[np.minimum(idx,
                                                          len(cdf) - 1)]
        else:
            parity = np.floor(pos).astype(np.int64) & 1
            u = rng.random(len(pos))
            nxt = np.empty_like(pos)
            for bit in (0, 1):
                mask = parity == bit
                if not mask.any():
                    continue
                law = kernel.laws[bit]
                cdf = np.cumsum(law.probs)
                idx = np.searchsorted(cdf, u[mask], side="right")
                nxt[mask] = pos[mask] + np.asarray(
                    law.values)[np.minimum(idx, len(cdf) - 1)]
            pos = nxt
        alive = pos > 0.0
        if int(alive.sum()) < min_alive:
            raise TooFewSurvivors(
                f"{int(alive.sum())} particles alive at step {step}")
        pos = pos[alive]
        anchor = anchor[alive]
        if step % resample_every == 0 and step < n:
            w = np.asarray(v(pos), dtype=np.float64) / anchor
            ess.append(float(w.sum() ** 2 / (w * w).sum()))
            pick = rng.choice(len(pos), size=particles, p=w / w.sum())
            pos = pos[pick]
            anchor = np.asarray(v(pos), dtype=np.float64).copy()
    weights = np.asarray(v(pos), dtype=np.float64) / anchor
    return SirResult(pos, weights, ess)


# Unconditioned diffusive behaviour.

@dataclass
class CltReport:
    ks: float
    var_ratio: float
    var_sigma: float
    method: str


def clt_diagnostic(kernel: ChainKernel, x: float, n: int, *,
                   trials: int = 100000, seed: int = 0,
                   stream: int = 3) -> CltReport:
    """KS distance of (X(n) - x)/sqrt(n), no killing, from the standard
    normal, plus a variance audit: the unit conditional variances force
    Var(X(n) - x) = n exactly through martingale orthogonality.

    Lattice iid kernels are evaluated from the exact n-fold convolution;
    the rest by simulation.
    """
    if kernel.mode == "iid" and kernel.is_lattice:
        for k, pmf in walk_marginals(kernel.laws[0], n):
            pass
        sites = pmf.sites().astype(np.float64)
        keep = pmf.probs > 0
        ks = ks_distance_discrete(sites[keep] / math.sqrt(n),
                                  pmf.probs[keep], normal_cdf)
        var = float((sites ** 2) @ pmf.probs) / n
        return CltReport(ks, var, 0.0, "exact")

    vals, cdfs, widths, mode = kernel.mc_arrays()
    _, endpoint = _backend.mc_chain(seed, stream, 0, trials, vals, cdfs,
                                    widths, mode, float(x), n, False)
    s = (endpoint - x) / math.sqrt(n)
    ks = ks_distance_sample(s, normal_cdf)
    sq = s * s
    var = float(sq.mean())
    var_sigma = float(sq.std(ddof=1) / math.sqrt(trials))
    return CltReport(ks, var, var_sigma, "mc")
