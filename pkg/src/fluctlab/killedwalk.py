"""Exact dynamic programming for lattice walks killed at a boundary.

The DP evolves the sub-probability layer K_n(y) = P(walk at y after n steps,
not yet killed) together with an absorption ledger (when and how deep the
walk was absorbed) and a truncation-loss ledger.  Killing checks start at
step 1, so a start on the boundary is allowed and dies with its first step
unless it jumps clear.  Windows are clipped at a dispersive scale with every
lost unit of mass tracked; all reported tolerances are widened by the loss.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np

from . import _backend
from .errors import NonLattice, WindowTooSmall, ZeroSurvival
from .steplaw import (Pmf, StepLaw, law_kernel, period_shift, unconditional_pmf,
                      walk_marginals)


@dataclass(frozen=True)
class BoundarySpec:
    """Integer moving boundary g(1..n); the walk dies when S(k) <= g(k).

    gmax(n) = max_{k<=n} |g(k)| is the nondecreasing envelope used by
    overshoot bounds.  Non-integer inputs are floored and the adjustment is
    recorded as a remark.
    """

    values: tuple
    remarks: tuple = ()

    @classmethod
    def constant(cls, level: int, n: int) -> "BoundarySpec":
        return cls(tuple([int(level)] * n))

    @classmethod
    def from_callable(cls, g: Callable[[int], float], n: int) -> "BoundarySpec":
        vals, remarks = [], []
        floored = False
        for k in range(1, n + 1):
            v = g(k)
            iv = math.floor(v)
            if iv != v:
                floored = True
            vals.append(int(iv))
        if floored:
            remarks.append("non-integer boundary values floored")
        return cls(tuple(vals), tuple(remarks))

    def __len__(self):
        return len(self.values)

    def gmax(self, n: int) -> int:
        return max(abs(v) for v in self.values[:n]) if n else 0

    def envelope(self) -> np.ndarray:
        """gmax(k) for k = 1..n as an array (nondecreasing)."""
        return np.maximum.accumulate(np.abs(np.asarray(self.values, dtype=np.int64)))


@dataclass
class KilledProfile:
    """Per-step ledger of a killed-walk DP run.

    State coordinates are absolute sites y (for a start-x run y = x + S(n),
    killed at y <= 0; for a moving-boundary run y = S(n), killed at
    y <= g(n)).  survival[k] = P(alive after k steps); absorbed_mass[k-1] =
    P(killed exactly at step k); absorbed_depth[k-1] = E[threshold - y at
    absorption; killed at k] >= 0; alive_sum_y[k] = E[y; alive at k];
    loss[k] = cumulative truncated mass (an error bound for every reported
    probability).
    """

    law: StepLaw
    start: int
    thresholds: np.ndarray
    survival: np.ndarray
    absorbed_mass: np.ndarray
    absorbed_depth: np.ndarray
    alive_sum_y: np.ndarray
    loss: np.ndarray
    final: Pmf
    snapshots: dict = field(default_factory=dict)
    absorbed_sites: np.ndarray | None = None
    remarks: tuple = ()

    @property
    def n(self) -> int:
        return len(self.thresholds)

    def alive_excess(self, k: int) -> float:
        """E[y - g(k); alive at k]; for a start-x run this is
        E[x + S(k); not yet killed]."""
        thr = self.thresholds[k - 1] if k >= 1 else 0
        return float(self.alive_sum_y[k] - thr * self.survival[k])

    def absorbed_total(self, k: int | None = None) -> float:
        k = self.n if k is None else k
        return float(self.absorbed_mass[:k].sum())

    def mass_error(self, k: int | None = None) -> float:
        """|survival + absorbed + loss - 1| at step k."""
        k = self.n if k is None else k
        return abs(self.survival[k] + self.absorbed_mass[:k].sum()
                   + self.loss[k] - 1.0)

    def stopped_value_error(self, k: int | None = None) -> float:
        """Martingale identity residual |E[y; alive at k] + E[y at death;
        dead by k] - start|.  Should be ~0 for zero-mean laws."""
        k = self.n if k is None else k
        dead_y = (self.thresholds[:k] * self.absorbed_mass[:k]).sum() \
            - self.absorbed_depth[:k].sum()
        return abs(float(self.alive_sum_y[k] + dead_y) - self.start)

    def partial_v(self, k: int | None = None) -> float:
        """E[start - y at death; dead by k]: the monotone approximant of the
        harmonic-function value at the start (start-x runs)."""
        k = self.n if k is None else k
        return float(((self.start - self.thresholds[:k]) * self.absorbed_mass[:k]
                      + self.absorbed_depth[:k]).sum())

    def csv_rows(self):
        """Rows (n, survival, absorbed, E_partial_V, U_g, loss_bound)."""
        acc_abs = 0.0
        acc_v = 0.0
        for k in range(1, self.n + 1):
            acc_abs += float(self.absorbed_mass[k - 1])
            acc_v += float((self.start - self.thresholds[k - 1])
                           * self.absorbed_mass[k - 1]
                           + self.absorbed_depth[k - 1])
            yield (k, float(self.survival[k]), acc_abs, acc_v,
                   self.alive_excess(k), float(self.loss[k]))


def _default_caps(law: StepLaw, start: int, thresholds: np.ndarray,
                  c: float) -> np.ndarray:
    """Dispersive window caps: keep sites up to start + max jump +
    c * sigma * sqrt(n log (n+2)), never below the natural reach."""
    n = len(thresholds)
    sigma = math.sqrt(max(law.variance, 1e-12))
    ks = np.arange(1, n + 1, dtype=np.float64)
    clip = np.ceil(c * sigma * np.sqrt(ks * np.log(ks + 2.0))).astype(np.int64)
    natural = np.minimum(ks.astype(np.int64) * max(law.max_step, 0),
                         np.iinfo(np.int64).max // 4)
    base = int(start) + int(law.max_step)
    return base + np.minimum(natural + abs(law.max_step), clip)


def _run(law: StepLaw, start: int, thresholds: np.ndarray, *, window=None,
         loss_tol=1e-12, snapshots=(), record_sites=False, c=4.0,
         remarks=()) -> KilledProfile:
    if law.kind != "lattice":
        raise NonLattice("killed DP needs an integer lattice law")
    thresholds = np.asarray(thresholds, dtype=np.int64)
    if len(thresholds) == 0:
        raise ValueError("need at least one step")
    kern = law_kernel(law)
    if window is not None:
        caps = np.full(len(thresholds), int(start) + int(window), dtype=np.int64)
    else:
        caps = _default_caps(law, start, thresholds, c)
    res = _backend.dp_killed(start, np.ones(1), kern.offset, kern.probs,
                             thresholds, caps, snapshots=snapshots,
                             record_sites=record_sites)
    if res["loss"][-1] > loss_tol:
        raise WindowTooSmall(
            f"window truncates {res['loss'][-1]:.3e} > tolerance {loss_tol:.3e}")
    return KilledProfile(
        law=law, start=int(start), thresholds=thresholds,
        survival=res["survival"], absorbed_mass=res["absorbed_mass"],
        absorbed_depth=res["absorbed_depth"], alive_sum_y=res["alive_sum_y"],
        loss=res["loss"],
        final=Pmf(res["final"][0], res["final"][1]),
        snapshots={k: Pmf(o, v) for k, (o, v) in res["snapshots"].items()},
        absorbed_sites=res.get("absorbed_sites"),
        remarks=tuple(remarks),
    )


def survival_profile(law: StepLaw, x: int, n: int, **kw) -> KilledProfile:
    """DP profile of the walk started at x >= 0 and killed at sites <= 0.

    survival[k] = P(tau_x > k) where tau_x is the first visit of x + S to
    the nonpositive half-line.
    """
    if x < 0:
        raise ValueError("start must be >= 0")
    return _run(law, x, np.zeros(n, dtype=np.int64), **kw)


def moving_boundary_profile(law: StepLaw, boundary: BoundarySpec,
                            n: int | None = None, *, start: int = 0,
                            **kw) -> KilledProfile:
    """DP profile of the walk killed when S(k) <= g(k)."""
    n = len(boundary) if n is None else n
    if n > len(boundary):
        raise ValueError("boundary shorter than requested horizon")
    return _run(law, start, np.asarray(boundary.values[:n], dtype=np.int64),
                remarks=boundary.remarks, **kw)


def conditional_pmf(law: StepLaw, x: int, n: int, **kw) -> Pmf:
    """Law of x + S(n) conditioned on survival up to n."""
    prof = survival_profile(law, x, n, snapshots=(n,), **kw)
    layer = prof.snapshots[n]
    total = layer.mass
    if total <= 1e-300:
        raise ZeroSurvival(f"survival at n={n} is numerically zero")
    return Pmf(layer.offset, layer.probs / total)


def partial_v(law: StepLaw, x: int, n: int, **kw) -> tuple[float, float]:
    """(E[-S(tau); tau <= n], E[x + S(n); tau > n]) for the start-x walk.

    The first component increases to the harmonic-function value V(x); the
    two are linked by optional stopping: second = x + overshoot part of the
    first.
    """
    prof = survival_profile(law, x, n, **kw)
    v_part = prof.partial_v()
    return v_part, prof.alive_excess(n)


def local_limit_error(law: StepLaw, x: int, n: int, **kw):
    """Sup-distance between the conditioned-walk pmf at time n (scaled by
    sqrt(n)) and its boundary Gaussian prediction, over the reachable
    residue class.  Returns (error, argmax site)."""
    info = period_shift(law)
    var = law.variance
    pmf = conditional_pmf(law, x, n, **kw)
    hi = max(pmf.support_end, int(x + math.ceil(8.0 * math.sqrt(var * n))))
    best, arg = -1.0, None
    sqrt_n = math.sqrt(n)
    for y in range(1, hi + 1):
        if not info.supports(n, y - x):
            continue
        pred = (info.d * y / (var * sqrt_n)) * math.exp(-y * y / (2.0 * var * n))
        err = abs(sqrt_n * pmf.at(y) - pred)
        if err > best:
            best, arg = err, y
    return best, arg


def smoothing_deltas(law: StepLaw, js: Sequence[int]) -> dict[int, float]:
    """Delta_j = sup_y |P(S(j+1) >= y) - P(S(j) >= y)| for each requested j,
    computed from one marginal sweep."""
    js = sorted(set(int(j) for j in js))
    if js and js[0] < 0:
        raise ValueError("j must be >= 0")
    out = {}
    prev = None
    top = js[-1] + 1 if js else 0
    for k, pmf in walk_marginals(law, top):
        if prev is not None and (k - 1) in js:
            out[k - 1] = _sup_tail_diff(prev, pmf)
        prev = pmf
    return out


def smoothing_delta(law: StepLaw, j: int) -> float:
    return smoothing_deltas(law, [j])[j]


def _sup_tail_diff(a: Pmf, b: Pmf) -> float:
    lo = min(a.offset, b.offset)
    hi = max(a.support_end, b.support_end)
    ta = np.zeros(hi - lo + 1)
    tb = np.zeros(hi - lo + 1)
    ta[a.offset - lo:a.support_end - lo] = a.probs
    tb[b.offset - lo:b.support_end - lo] = b.probs
    # tails P(X >= y) for y = lo..hi via reversed cumsum
    tail_a = np.cumsum(ta[::-1])[::-1]
    tail_b = np.cumsum(tb[::-1])[::-1]
    return float(np.abs(tail_a - tail_b).max())


def fkg_gap(law: StepLaw, n: int, *, x: int | None = None,
            boundary: BoundarySpec | None = None, **kw) -> float:
    """Largest violation of the positive-correlation inequality
    P(S(n) > t, alive) >= P(S(n) > t) P(alive) over all thresholds t.
    Nonpositive values mean the inequality holds."""
    if (x is None) == (boundary is None):
        raise ValueError("give exactly one of x or boundary")
    if x is not None:
        prof = survival_profile(law, x, n, snapshots=(n,), **kw)
        shift = x
    else:
        prof = moving_boundary_profile(law, boundary, n, snapshots=(n,), **kw)
        shift = 0
    layer = prof.snapshots[n]
    free = unconditional_pmf(law, n)
    surv = prof.survival[n]
    lo = min(layer.offset, free.offset + shift)
    hi = max(layer.support_end, free.support_end + shift)
    worst = 0.0
    for t in range(lo - 1, hi + 1):
        joint = layer.tail_ge(t + 1)
        indep = free.tail_ge(t + 1 - shift) * surv
        worst = max(worst, indep - joint)
    return worst


def domination_gap(law: StepLaw, x: int, n: int, **kw) -> float:
    """Largest violation of P(x + S(n) > y | alive) >= P(S(n) > y)."""
    pmf = conditional_pmf(law, x, n, **kw)
    free = unconditional_pmf(law, n)
    lo = min(pmf.offset, free.offset) - 1
    hi = max(pmf.support_end, free.support_end) + 1
    worst = 0.0
    for y in range(lo, hi):
        worst = max(worst, free.tail_ge(y + 1) - pmf.tail_ge(y + 1))
    return worst


def profile_to_csv(profile: KilledProfile, fh) -> None:
    """Write the ledger in the library's standard CSV layout."""
    fh.write("n,survival,absorbed,E_partial_V,U_g,loss_bound\n")
    for row in profile.csv_rows():
        fh.write("%d,%.17g,%.17g,%.17g,%.17g,%.17g\n" % row)


# Exact-rational oracle route (independent of the float DP above).

def exact_killed_layers(law: StepLaw, x: int, n: int):
    """Killed-walk layers and absorption ledger in exact big-integer
    rationals.  Oracle use only; cost grows with the support, keep n <= 64.

    Returns (layers, absorbed): layers[k] maps alive site -> Fraction,
    absorbed[k-1] maps dead site (<= 0) -> Fraction.
    """
    if law.exact is None:
        raise ValueError("exact DP needs a law with rational probabilities")
    if law.kind != "lattice":
        raise NonLattice("exact DP needs a lattice law")
    if n > 64:
        raise ValueError("exact DP is an oracle for n <= 64")
    atoms = list(zip(law.values, law.exact))
    layer = {int(x): Fraction(1)}
    layers = [dict(layer)]
    absorbed = []
    for _ in range(n):
        new: dict[int, Fraction] = {}
        for site, m in layer.items():
            for v, q in atoms:
                t = site + v
                new[t] = new.get(t, Fraction(0)) + m * q
        dead = {s: m for s, m in new.items() if s <= 0}
        layer = {s: m for s, m in new.items() if s > 0}
        absorbed.append(dead)
        layers.append(dict(layer))
    return layers, absorbed


def exact_survival(law: StepLaw, x: int, n: int) -> Fraction:
    layers, _ = exact_killed_layers(law, x, n)
    return sum(layers[n].values(), Fraction(0))
