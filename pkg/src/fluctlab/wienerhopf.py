"""Generating-function and measure-level factorisation checks.

Two independent routes to first-passage quantities are kept deliberately
separate so they can certify each other: formal power series built from the
marginals P(S(n) <= 0) (no path enumeration), and absorption ledgers from
the killed-walk DP (no series manipulation).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import InsufficientRange, NonSummable
from .killedwalk import survival_profile
from .oracles import central_binom_weight
from .steplaw import StepLaw, walk_marginals


@dataclass(frozen=True)
class TruncatedSeries:
    """Power series in u truncated after u^N, coefficientwise numpy array."""

    coef: np.ndarray

    @classmethod
    def from_coeffs(cls, coeffs, order: int | None = None) -> "TruncatedSeries":
        c = np.asarray(coeffs, dtype=np.float64).copy()
        if order is not None:
            out = np.zeros(order + 1)
            out[:min(len(c), order + 1)] = c[:order + 1]
            c = out
        return cls(c)

    @classmethod
    def one(cls, order: int) -> "TruncatedSeries":
        c = np.zeros(order + 1)
        c[0] = 1.0
        return cls(c)

    @property
    def order(self) -> int:
        return len(self.coef) - 1

    def __add__(self, other):
        if isinstance(other, TruncatedSeries):
            return TruncatedSeries(self.coef + other.coef)
        c = self.coef.copy()
        c[0] += other
        return TruncatedSeries(c)

    def __sub__(self, other):
        if isinstance(other, TruncatedSeries):
            return TruncatedSeries(self.coef - other.coef)
        c = self.coef.copy()
        c[0] -= other
        return TruncatedSeries(c)

    def __rsub__(self, scalar):
        c = -self.coef
        c[0] += scalar
        return TruncatedSeries(c)

    def __neg__(self):
        return TruncatedSeries(-self.coef)

    def scale(self, s: float) -> "TruncatedSeries":
        return TruncatedSeries(self.coef * s)

    def mul(self, other: "TruncatedSeries") -> "TruncatedSeries":
        n = self.order
        return TruncatedSeries(np.convolve(self.coef, other.coef)[:n + 1])

    __mul__ = mul

    def exp(self) -> "TruncatedSeries":
        a = self.coef
        n = self.order
        b = np.zeros(n + 1)
        b[0] = math.exp(a[0])
        ka = np.arange(n + 1) * a
        for m in range(1, n + 1):
            # b_m = (1/m) sum_{k=1}^{m} k a_k b_{m-k}
            b[m] = (ka[1:m + 1] @ b[m - 1::-1][:m]) / m
        return TruncatedSeries(b)

    def log(self) -> "TruncatedSeries":
        a = self.coef
        if a[0] <= 0.0:
            raise ValueError("log needs a positive constant term")
        n = self.order
        b = np.zeros(n + 1)
        b[0] = math.log(a[0])
        for m in range(1, n + 1):
            kb = np.arange(1, m) * b[1:m]
            acc = kb @ a[m - 1:0:-1] if m > 1 else 0.0
            b[m] = (a[m] - acc / m) / a[0]
        return TruncatedSeries(b)

    def eval(self, u: float) -> float:
        return float(np.polynomial.polynomial.polyval(u, self.coef))


def halfline_log_series(law: StepLaw, order: int, side: str) -> TruncatedSeries:
    """sum_n (u^n / n) P(S(n) in half-line), the log-series both epoch
    generating functions are built from.  side is 'le0' or 'gt0'."""
    if side not in ("le0", "gt0"):
        raise ValueError("side must be 'le0' or 'gt0'")
    c = np.zeros(order + 1)
    for n, pmf in walk_marginals(law, order):
        if n == 0:
            continue
        p_le0 = pmf.cdf_le(0)
        c[n] = (p_le0 if side == "le0" else 1.0 - p_le0) / n
    return TruncatedSeries(c)


def epoch_egf(law: StepLaw, order: int, side: str) -> TruncatedSeries:
    """Generating function sum_n u^n P(eta = n) of a first-passage epoch:
    side 'le0' gives the first visit of S to (-inf, 0], side 'gt0' the first
    visit to (0, inf)."""
    return 1.0 - (-halfline_log_series(law, order, side)).exp()


def spitzer_survival_series(law: StepLaw, order: int) -> TruncatedSeries:
    """sum_n u^n P(first visit to (-inf,0] is later than n), directly from
    the marginals via the exponential identity.  Coefficient n is the
    survival probability at horizon n; a DP-free route."""
    return halfline_log_series(law, order, "gt0").exp()


def wh_identity_residual(law: StepLaw, order: int) -> float:
    """Largest coefficient of (1 - f_down)(1 - f_up) - (1 - u), which
    vanishes identically when the two epoch generating functions factor the
    step law."""
    f_down = epoch_egf(law, order, "le0")
    f_up = epoch_egf(law, order, "gt0")
    prod = (1.0 - f_down) * (1.0 - f_up)
    target = np.zeros(order + 1)
    target[0] = 1.0
    if order >= 1:
        target[1] = -1.0
    return float(np.abs(prod.coef - target).max())


def spitzer_vs_dp_gap(law: StepLaw, n: int) -> float:
    """Max over horizons <= n of |series survival - DP survival|: the two
    fully independent routes to P(tau > n) from a start on the boundary."""
    series = spitzer_survival_series(law, n).coef
    prof = survival_profile(law, 0, n)
    return float(np.abs(series - prof.survival).max())


def symmetric_continuous_reference(order: int):
    """Run the series engine on the exact half-line weights of a symmetric
    atomless law (P(S(n) <= 0) = 1/2 for every n) and compare with the
    closed forms 1 - sqrt(1-u) and binomial central weights.

    Returns (max epoch-coefficient error, max survival-coefficient error).
    """
    c = np.zeros(order + 1)
    c[1:] = 0.5 / np.arange(1, order + 1)
    log_half = TruncatedSeries(c)
    f = 1.0 - (-log_half).exp()
    surv = log_half.exp()

    # closed forms: 1 - (1-u)^{1/2} and (1-u)^{-1/2}
    f_err = 0.0
    s_err = 0.0
    coef_f = 0.0
    for n in range(order + 1):
        w = float(central_binom_weight(n))
        if n == 0:
            coef_f = 0.0
        else:
            # [u^n] (1-u)^{1/2} = -w / (2n - 1)
            coef_f = w / (2 * n - 1)
        f_err = max(f_err, abs(f.coef[n] - coef_f))
        s_err = max(s_err, abs(surv.coef[n] - w))
    return f_err, s_err


# Path-enumeration duality (exact, exhaustive; oracle-grade).

def duality_path_check(law: StepLaw, n_max: int):
    """Exhaustively verify the path-reversal duality: the probability that n
    is a strict ascending ladder epoch equals P(first visit to (-inf,0] is
    later than n), and the weak descending analogue equals the (0,inf)
    epoch's survival.  Exact rationals; cost |support|^n, capped at 1e7.

    Returns the maximal absolute discrepancy over n <= n_max (exact zero
    when the duality holds).
    """
    if law.exact is None:
        raise ValueError("path enumeration needs rational probabilities")
    k = len(law.values)
    if k ** n_max > 10 ** 7:
        raise ValueError("path budget exceeded; lower n_max")
    atoms = list(zip(law.values, law.exact))

    worst = Fraction(0)
    # paths of length n, grown incrementally: state = (partial sums tuple)
    frontier = [((0,), Fraction(1))]
    for n in range(1, n_max + 1):
        new = []
        for path, pr in frontier:
            last = path[-1]
            for v, q in atoms:
                new.append((path + (last + v,), pr * q))
        frontier = new

        ladder_strict = Fraction(0)   # S(n) > S(k) for all k < n
        ladder_weak_desc = Fraction(0)  # S(n) <= S(k) for all k < n
        surv_le0 = Fraction(0)        # S(k) > 0 for all 1 <= k <= n
        surv_gt0 = Fraction(0)        # S(k) <= 0 for all 1 <= k <= n
        for path, pr in frontier:
            body, tip = path[:-1], path[-1]
            if all(tip > s for s in body):
                ladder_strict += pr
            if all(tip <= s for s in body):
                ladder_weak_desc += pr
            if all(s > 0 for s in path[1:]):
                surv_le0 += pr
            if all(s <= 0 for s in path[1:]):
                surv_gt0 += pr
        worst = max(worst, abs(ladder_strict - surv_le0),
                    abs(ladder_weak_desc - surv_gt0))
    return worst


# Measure-level factorisation from DP absorption ledgers.

def epoch_harmonic_measure(law: StepLaw, n: int, side: str):
    """Absorption ledger of a first-passage epoch, site by site.

    Returns (sites, mass) with mass[n-1, j] = P(epoch = n, stopped walk at
    sites[j]).  side 'le0': walk from 0, stopped on entering (-inf, 0],
    sites in (min jump, 0].  side 'gt0': first entry of S into (0, inf),
    realised by running the negated walk from 1 down; sites in [1, max jump].
    Also returns the DP truncation loss.
    """
    if side == "le0":
        run_law, start = law, 0
        prof = survival_profile(run_law, start, n, record_sites=True)
        depth = prof.absorbed_sites.shape[1]
        sites = -np.arange(depth)
        mass = prof.absorbed_sites
    elif side == "gt0":
        run_law, start = law.negate(), 1
        prof = survival_profile(run_law, start, n, record_sites=True)
        depth = prof.absorbed_sites.shape[1]
        # stopped site z of the negated walk is 1 - S(epoch)
        sites = 1 + np.arange(depth)
        mass = prof.absorbed_sites
    else:
        raise ValueError("side must be 'le0' or 'gt0'")
    return sites, mass, float(prof.loss[-1])


def dual_factorisation_check(law: StepLaw, u: float, order: int):
    """Check the measure identity (delta_0 - u F) = (delta_0 - A_u) *
    (delta_0 - B_u) on the lattice, where A_u, B_u are the u-weighted
    absorption measures of the two first-passage epochs truncated at the
    given order.

    Returns (discrepancy, defect): discrepancy is the total-variation gap
    between the two sides as computed, defect the rigorous truncation bound;
    the identity holds when discrepancy <= defect (+ float noise).
    """
    if not (0.0 < u < 1.0):
        raise ValueError("u must be in (0, 1)")
    sa, ma, loss_a = epoch_harmonic_measure(law, order, "le0")
    sb, mb, loss_b = epoch_harmonic_measure(law, order, "gt0")
    w = u ** np.arange(1, order + 1)
    a_vals = w @ ma
    b_vals = w @ mb
    tail_a = max(1.0 - ma.sum(), 0.0) + loss_a
    tail_b = max(1.0 - mb.sum(), 0.0) + loss_b
    defect_a = u ** (order + 1) * tail_a + loss_a
    defect_b = u ** (order + 1) * tail_b + loss_b
    defect = 2.0 * defect_a + 2.0 * defect_b + defect_a * defect_b

    lo = int(sa.min() + min(sb.min(), 0))
    hi = int(sb.max() + max(sa.max(), 0))
    width = hi - lo + 1

    left = np.zeros(width)   # delta_0 - A_u
    left[0 - lo] = 1.0
    for s, v in zip(sa, a_vals):
        left[s - lo] -= v
    right = np.zeros(width)
    right[0 - lo] = 1.0
    for s, v in zip(sb, b_vals):
        right[s - lo] -= v
    prod = np.convolve(left, right)
    prod_lo = 2 * lo

    target = np.zeros_like(prod)
    target[0 - prod_lo] = 1.0
    for v, p in zip(law.values, law.probs):
        target[v - prod_lo] -= u * p
    return float(np.abs(prod - target).sum()), float(defect)


def ladder_height_law(law: StepLaw, order: int = 400):
    """Distribution of the stopping depth -S at the first visit of
    (-inf, 0], i.e. of the weak descending ladder height magnitude.

    Laws whose only downward jump is -1 get the exact structural answer
    (overshoot impossible: magnitude 1 iff the very first excursion step is
    the jump to -1 ... magnitude is 1 with probability P(X = -1), else 0)
    with zero defect.  Otherwise the DP ledger summed over epochs <= order
    is returned with its truncation defect.

    Returns (dict magnitude -> mass, defect).
    """
    if law.min_step == -1:
        q = law.prob_of(-1)
        return {1: q, 0: 1.0 - q}, 0.0
    sites, mass, loss = epoch_harmonic_measure(law, order, "le0")
    tot = mass.sum(axis=0)
    out = {int(-s): float(v) for s, v in zip(sites, tot) if v > 0.0}
    defect = max(1.0 - mass.sum(), 0.0) + loss
    return out, defect


def renewal_function(law: StepLaw, x_max: int, *, order: int = 400,
                     tol: float = 1e-12):
    """Expected number of weak descending ladder points at depth < x plus
    one: U(0) = 1, U(x) = 1 + sum_m P(xi_1 + ... + xi_m < x) for the iid
    ladder magnitudes xi.

    Returns (array U(0..x_max), certificate) where certificate bounds the
    total error from truncating the renewal sum (Chernoff on the count of
    nonzero magnitudes) plus the propagated ladder-law defect.
    """
    mags, defect = ladder_height_law(law, order)
    rho = sum(v for m, v in mags.items() if m >= 1)
    if rho <= 0.0:
        raise NonSummable("ladder magnitude is almost surely 0")

    u = np.zeros(x_max + 1)
    u[0] = 1.0
    if x_max == 0:
        return u, defect
    u[1:] += 1.0  # m = 0: the empty sum is < x for every x >= 1

    # partial-sum mass restricted to [0, x_max); anything at >= x_max can
    # never re-enter the window, so the restricted convolution is exact
    width = x_max
    kern = np.zeros(x_max + 1)
    for m, v in mags.items():
        if m <= x_max:
            kern[m] = v
    cur = np.zeros(width)
    cur[0] = 1.0

    k = x_max - 1  # sums below x_max have at most k nonzero magnitudes
    q0 = 1.0 - rho
    m_used = 0
    while True:
        m_used += 1
        cur = np.convolve(cur, kern)[:width]
        csum = np.cumsum(cur)
        # P(sum_m < x) = csum[x-1]
        u[1:] += csum[:x_max]
        # geometric closure needs the binomial term ratio under 1
        ratio = q0 * (m_used + 2) / (m_used + 2 - k) if m_used + 2 > k else 1.0
        if m_used * rho >= 2 * (k + 1) and ratio < 0.9 and csum[-1] < tol:
            break
        if m_used > 100000:
            raise NonSummable("renewal sum failed to converge")
    # remainder: P(sum_m < x) <= P(Bin(m, rho) <= k), whose largest term
    # while k <= m rho is the j = k one, so the tail over m > m_used is
    # geometrically dominated with the ratio checked above
    if q0 == 0.0:
        remainder = 0.0
    else:
        log_term = (math.log(k + 1.0) + math.lgamma(m_used + 2.0)
                    - math.lgamma(k + 1.0) - math.lgamma(m_used + 2.0 - k)
                    + k * math.log(rho) + (m_used + 1.0 - k) * math.log(q0))
        remainder = math.exp(log_term) / (1.0 - ratio)
    cert = remainder + defect * m_used * (m_used + 1) / 2.0
    return u, cert


def rho_tail_fit(law: StepLaw, n_lo: int, n_hi: int) -> float:
    """Positivity exponent estimate from the survival decay P(tau > n) ~
    C n^{rho - 1}: doubling-slope estimates on a geometric grid, averaged.
    Raises InsufficientRange when the grid has fewer than three points."""
    if n_lo < 2:
        raise ValueError("n_lo must be >= 2")
    grid = []
    n = n_lo - (n_lo % 2)
    while 2 * n <= n_hi:
        grid.append(n)
        n *= 2
    if len(grid) < 3:
        raise InsufficientRange("need n_hi >= 8 * n_lo for a stable fit")
    prof = survival_profile(law, 0, n_hi)
    s = prof.survival
    est = [1.0 + math.log(s[2 * n] / s[n]) / math.log(2.0) for n in grid]
    # Cesaro average damps the O(1/n) bias oscillation
    return float(np.mean(est))
