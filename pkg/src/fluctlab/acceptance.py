"""Numbered verification suite tying every headline statement to a number.

Each criterion runs one self-contained experiment and reduces it to named
checks (measured value, comparator, threshold).  The suite is the single
source of truth for "does this build reproduce the theory": the CLI
`verify` command and the acceptance tests both call into here, so a
criterion cannot pass on the command line and fail under pytest.

All checks are deterministic given the seed; elapsed times are reported
alongside but kept out of the machine-readable document so two runs with
the same seed emit identical JSON.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import chain, harmonic, killedwalk, oracles, universal, wienerhopf
from ._backend import BACKEND_NAME
from .steplaw import BUILTIN_LAWS, ssrw, left23, uniform3, walk_marginals

SQRT_2_OVER_PI = math.sqrt(2.0 / math.pi)


@dataclass(frozen=True)
class Check:
    """One comparison: measured <op> threshold, margin signed so that
    positive means pass with room."""

    name: str
    comparator: str
    measured: float
    threshold: float

    @property
    def passed(self) -> bool:
        m, t = self.measured, self.threshold
        if self.comparator == "<=":
            return m <= t
        if self.comparator == "<":
            return m < t
        if self.comparator == ">=":
            return m >= t
        if self.comparator == ">":
            return m > t
        raise ValueError(f"unknown comparator {self.comparator!r}")

    @property
    def margin(self) -> float:
        if self.comparator in ("<=", "<"):
            return self.threshold - self.measured
        return self.measured - self.threshold

    def to_dict(self) -> dict:
        return {"name": self.name, "comparator": self.comparator,
                "measured": self.measured, "threshold": self.threshold,
                "margin": self.margin, "passed": self.passed}


def _le(name, measured, threshold):
    return Check(name, "<=", float(measured), float(threshold))


def _lt(name, measured, threshold):
    return Check(name, "<", float(measured), float(threshold))


def _gt(name, measured, threshold):
    return Check(name, ">", float(measured), float(threshold))


def _decreasing(name, values):
    """Strict decrease along the sequence; measured is the tightest
    consecutive drop."""
    vals = [float(v) for v in values]
    drop = min(a - b for a, b in zip(vals, vals[1:]))
    return Check(name, ">", drop, 0.0)


@dataclass
class CriterionResult:
    number: int
    name: str
    budget_s: float
    elapsed_s: float
    checks: list = field(default_factory=list)
    notes: tuple = ()

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    @property
    def margin(self) -> float:
        return min(c.margin for c in self.checks)

    def to_dict(self, include_elapsed: bool = False) -> dict:
        d = {"criterion": self.number, "name": self.name,
             "passed": self.passed, "margin": self.margin,
             "checks": [c.to_dict() for c in self.checks],
             "notes": list(self.notes)}
        if include_elapsed:
            d["elapsed_s"] = self.elapsed_s
            d["budget_s"] = self.budget_s
        return d


# ---------------------------------------------------------------- criteria

def _ssrw_exact_pmf(n: int, z: int) -> Fraction:
    if abs(z) > n or (n + z) % 2:
        return Fraction(0)
    return Fraction(math.comb(n, (n + z) // 2), 2 ** n)


def _c1_reflection(seed: int):
    """Killed unit-walk pmf against the two-term reflection difference,
    exact rationals then the float DP."""
    law = ssrw()
    worst_rational = Fraction(0)
    for x in range(1, 21):
        layers, _ = killedwalk.exact_killed_layers(law, x, 60)
        for n in range(0, 61):
            for y in range(1, 21):
                lhs = layers[n].get(y, Fraction(0))
                rhs = _ssrw_exact_pmf(n, y - x) - _ssrw_exact_pmf(n, y + x)
                worst_rational = max(worst_rational, abs(lhs - rhs))
    worst_float = 0.0
    marks = tuple(range(1, 61))
    for x in range(1, 21):
        prof = killedwalk.survival_profile(law, x, 60, snapshots=marks)
        for n in marks:
            layer = prof.snapshots[n]
            for y in range(1, 21):
                diff = abs(layer.at(y) - oracles.simple_refl_pmf(x, y, n))
                worst_float = max(worst_float, diff)
    return [_le("rational-max-error", float(worst_rational), 0.0),
            _le("float-max-error", worst_float, 1e-12)], []


def _c2_hitting_time(seed: int):
    """First-passage pmf of skip-free walks against the cyclic-shift form
    (x/n) P(S(n) = -x)."""
    checks = []
    for name, mk in (("ssrw", ssrw), ("left23", left23)):
        law = mk()
        margins = {n: pmf for n, pmf in walk_marginals(law, 300)}
        worst = 0.0
        for x in range(1, 11):
            prof = killedwalk.survival_profile(law, x, 300)
            for n in range(1, 301):
                rhs = (x / n) * margins[n].at(-x)
                worst = max(worst, abs(float(prof.absorbed_mass[n - 1]) - rhs))
        checks.append(_le(f"max-error-{name}", worst, 1e-12))
    return checks, []


def _c3_factorisation_identity(seed: int):
    """Product of the two first-passage generating functions against 1 - u,
    coefficients through order 200."""
    checks = [_lt(f"residual-{name}",
                  wienerhopf.wh_identity_residual(mk(), 200), 1e-10)
              for name, mk in BUILTIN_LAWS.items()]
    return checks, []


def _c4_series_vs_dp(seed: int):
    """Survival numbers from the exponential series route against the DP
    route, every horizon through 200."""
    checks = [_lt(f"gap-{name}", wienerhopf.spitzer_vs_dp_gap(mk(), 200),
                  1e-10)
              for name, mk in BUILTIN_LAWS.items()]
    return checks, []


def _c5_measure_factorisation(seed: int):
    """Lattice-measure factorisation of delta_0 - u F into the two
    u-weighted absorption measures, truncated at 60 epochs."""
    checks = []
    for name, mk in (("ssrw", ssrw), ("left23", left23)):
        law = mk()
        for u in (0.3, 0.5, 0.7, 0.9):
            disc, defect = wienerhopf.dual_factorisation_check(law, u, 60)
            checks.append(_le(f"discrepancy-{name}-u{u:g}", disc,
                              1e-9 + defect))
    return checks, []


def _c6_tail_constant(seed: int):
    """sqrt(n) P(tau_1 > n) for the unit walk against sqrt(2/pi), with the
    deviation shrinking over two decades."""
    prof = killedwalk.survival_profile(ssrw(), 1, 10 ** 4)
    devs = [abs(math.sqrt(n) * float(prof.survival[n]) - SQRT_2_OVER_PI)
            for n in (100, 1000, 10000)]
    return [_le("relative-deviation-1e4", devs[-1] / SQRT_2_OVER_PI, 0.02),
            _decreasing("deviation-decreasing", devs)], []


def _c7_rayleigh_endpoint(seed: int):
    """Scaled endpoint law of the surviving unit walk against the Rayleigh
    distribution."""
    ks = {}
    for n in (100, 1000, 10000):
        pmf = killedwalk.conditional_pmf(ssrw(), 1, n)
        sites = pmf.sites().astype(np.float64)
        keep = pmf.probs > 0.0
        ks[n] = oracles.ks_distance_discrete(sites[keep] / math.sqrt(n),
                                             pmf.probs[keep],
                                             oracles.rayleigh_cdf)
    return [_le("ks-1e4", ks[10000], 0.03),
            _decreasing("ks-decreasing", [ks[n] for n in (100, 1000, 10000)])], []


def _c8_local_limit(seed: int):
    """Pointwise conditioned-walk pmf against its boundary Gaussian shape,
    sup over the reachable residue class."""
    errs = [killedwalk.local_limit_error(ssrw(), 1, n)[0]
            for n in (100, 1000, 10000)]
    return [_lt("sup-error-1e4", errs[-1], 0.05),
            _decreasing("sup-error-decreasing", errs)], []


_H_ORACLE = {"ssrw": 2.0, "uniform3": 3.0}   # slope of V/V(0); V(0) = 1/slope


def _c9_v_h_consistency(seed: int):
    """Harmonic-function ratio V(x)/V(0) against the independently known
    renewal slope, plus containment of the exact value in the DP bracket."""
    checks = []
    for name, mk in (("ssrw", ssrw), ("uniform3", uniform3)):
        law = mk()
        slope = _H_ORACLE[name]
        worst = 0.0
        worst_width = 0.0
        v0, w0 = harmonic.estimate_v(law, 0)
        for x in range(0, 11):
            vx, wx = harmonic.estimate_v(law, x)
            h_oracle = 1.0 if x == 0 else slope * x
            worst = max(worst, abs(vx / v0 - h_oracle))
            worst_width = max(worst_width, wx, w0)
        checks.append(_lt(f"ratio-error-{name}", worst, 1e-6))
        checks.append(_lt(f"certified-width-{name}", worst_width, 1e-6))
        # DP partial sums must bracket the exact value
        depth = -law.min_step
        worst_bracket = -math.inf
        for x in (0, 1, 5, 10):
            prof = killedwalk.survival_profile(law, x, 2000)
            part = prof.partial_v()
            tail = float(prof.survival[-1])
            vx, _ = harmonic.estimate_v(law, x)
            lo_gap = vx - (part + x * tail)
            hi_gap = (part + (x + depth) * tail) - vx
            worst_bracket = max(worst_bracket, -lo_gap, -hi_gap)
        checks.append(_le(f"bracket-violation-{name}", worst_bracket, 1e-10))
    return checks, []


def _chain_w_cases():
    rs = chain.region_switched_kernel()
    bound = rs.jump_bound()
    return [("unit-const", chain.ssrw_kernel(), chain.constant_majorant(1.0)),
            ("unit-wrapped", chain.ssrw_kernel(), chain.wrapped_majorant(1.0)),
            ("switched-const", rs, chain.constant_majorant(bound)),
            ("switched-wrapped", rs, chain.wrapped_majorant(bound))]


def _c10_superharmonicity(seed: int):
    """One-step defects of every shipped supermartingale envelope, walk and
    chain alike, plus the harmonicity residual of V itself."""
    checks = []
    xs = list(np.arange(0.0, 30.25, 0.25)) + [2.0 ** k for k in range(5, 11)]
    for name, mk in BUILTIN_LAWS.items():
        law = mk()
        checks.append(_le(f"walk-defect-{name}",
                          harmonic.superharmonic_margin(law, xs), 1e-10))
        res = harmonic.harmonicity_residuals(law, range(1, 200))
        checks.append(_le(f"v-residual-{name}",
                          max(abs(r) for r in res.values()), 1e-10))
    probes = (0.0, 0.25, 0.5, 0.75, 1.0, 1.5, 2.0, 3.0, 5.0, 7.5, 10.0,
              25.0, 100.0, 1000.0)
    for tag, kernel, maj in _chain_w_cases():
        chain.kernel_validate(kernel, maj).raise_if_failed()
        w = chain.build_chain_W(maj)
        drift = chain.drift_check(w, kernel, probes)
        checks.append(_le(f"chain-defect-{tag}", max(drift.values()), 1e-10))
    return checks, []


def _c11_inequality_suite(seed: int):
    """Exact inequalities on DP profiles: positive association of survival
    and endpoint, conditional stochastic domination, and the renewal-slope
    upper bound on survival."""
    checks = []
    ns = (10, 100, 1000)
    for name, mk in BUILTIN_LAWS.items():
        law = mk()
        fkg = max(killedwalk.fkg_gap(law, n, x=1) for n in ns)
        checks.append(_le(f"fkg-violation-{name}", fkg, 1e-12))
        dom = max(killedwalk.domination_gap(law, x, n)
                  for x in (1, 2, 5) for n in ns)
        checks.append(_le(f"domination-violation-{name}", dom, 1e-12))
        rep = harmonic.uniform_bound_report(law, (1, 2, 5), ns)
        checks.append(_le(f"upper-bound-violation-{name}",
                          -rep["worst_margin"], 1e-12))
    return checks, []


def _c12_chain_tail(seed: int):
    """Tail theorem for the state-dependent chain by simulation, and the
    simulator against the DP on the unit-walk kernel."""
    rs = chain.chain_survival(chain.region_switched_kernel(), 5.0, 2500,
                              trials=10 ** 6, seed=seed, method="mc")
    band = 3.0 * rs.ratio_sigma + 0.05
    checks = [_le("switched-ratio-off-by", abs(rs.ratio - 1.0), band)]
    mc = chain.chain_survival(chain.ssrw_kernel(), 3.0, 900,
                              trials=200000, seed=seed, method="mc")
    dp = chain.chain_survival(chain.ssrw_kernel(), 3.0, 900, method="dp")
    z = abs(mc.p_hat - dp.p_hat) / mc.sigma
    checks.append(_le("unit-mc-dp-sigmas", z, 4.0))
    notes = [f"switched ratio {rs.ratio:.4f} +- {rs.ratio_sigma:.4f}, "
             f"band half-width {band:.4f}",
             f"unit kernel p_mc {mc.p_hat:.6f} vs p_dp {dp.p_hat:.6f}"]
    return checks, notes


def _c13_doob_limit(seed: int):
    """Conditioned unit walk at a long horizon against its scaling limit,
    evaluated exactly."""
    ks = [chain.doob_limit_check(chain.ssrw_kernel(), 1, n)
          for n in (100, 1000, 10000)]
    return [_le("ks-1e4", ks[-1], 0.02),
            _decreasing("ks-decreasing", ks)], []


def _c14_divergence(seed: int):
    """Iterated-log growth of the diffusive-scale jump rate for the
    marginal family, flat tail for bounded iid steps."""
    rep = universal.divergence_diagnostic(universal.MarginalJumpSequence(),
                                          checkpoints=(10 ** 3, 10 ** 6))
    iid = universal.IidSequence(ssrw())
    inc = float(iid.upcross_probs(2 * 10 ** 5)[10 ** 5:].max())
    checks = [_gt("checkpoint-ratio", rep.ratio(), 1.25),
              _gt("loglog-slope", rep.slope, 0.0),
              _lt("iid-increment-past-1e5", inc, 1e-6)]
    notes = [f"S(1e3) = {rep.values[0]:.6f}, S(1e6) = {rep.values[-1]:.6f}",
             "the sum climbs at slope ~1/2 in log log N, so the window "
             "[1e3, 1e6] lifts it by only ~22% over its base value"]
    return checks, notes


_REGISTRY = [
    (1, "reflection-pmf", 5.0, _c1_reflection),
    (2, "hitting-time-pmf", 10.0, _c2_hitting_time),
    (3, "factorisation-identity", 5.0, _c3_factorisation_identity),
    (4, "series-vs-dp", 10.0, _c4_series_vs_dp),
    (5, "measure-factorisation", 60.0, _c5_measure_factorisation),
    (6, "tail-constant", 60.0, _c6_tail_constant),
    (7, "rayleigh-endpoint", 60.0, _c7_rayleigh_endpoint),
    (8, "local-limit", 60.0, _c8_local_limit),
    (9, "v-h-consistency", 30.0, _c9_v_h_consistency),
    (10, "superharmonicity", 30.0, _c10_superharmonicity),
    (11, "inequality-suite", 60.0, _c11_inequality_suite),
    (12, "chain-tail-theorem", 600.0, _c12_chain_tail),
    (13, "doob-limit", 60.0, _c13_doob_limit),
    (14, "divergence-diagnostic", 30.0, _c14_divergence),
]

MC_CRITERIA = frozenset({12})
NUMBERS = tuple(num for num, _, _, _ in _REGISTRY)


def run_criterion(number: int, seed: int = 0) -> CriterionResult:
    for num, name, budget, fn in _REGISTRY:
        if num == number:
            t0 = time.perf_counter()
            checks, notes = fn(seed)
            elapsed = time.perf_counter() - t0
            return CriterionResult(num, name, budget, elapsed,
                                   checks, tuple(notes))
    raise ValueError(f"no criterion numbered {number}")


def run_suite(level: str = "full", seed: int = 0,
              numbers=None) -> list:
    """quick: the deterministic DP criteria (seconds); full: everything,
    including the long simulation."""
    if level not in ("quick", "full"):
        raise ValueError(f"unknown level {level!r}")
    if numbers is None:
        numbers = [n for n in NUMBERS
                   if level == "full" or n not in MC_CRITERIA]
    return [run_criterion(n, seed) for n in numbers]


def suite_report(results, seed: int, level: str,
                 include_elapsed: bool = False) -> dict:
    return {"level": level, "seed": seed, "backend": BACKEND_NAME,
            "passed": all(r.passed for r in results),
            "failed": [r.number for r in results if not r.passed],
            "criteria": [r.to_dict(include_elapsed) for r in results]}


def format_table(results) -> str:
    lines = ["crit  name                     status  margin      elapsed"]
    for r in results:
        status = "PASS" if r.passed else "FAIL"
        lines.append(f"{r.number:>4}  {r.name:<24} {status:<6} "
                     f"{r.margin:<+11.3e} {r.elapsed_s:6.1f}s")
        for c in r.checks:
            if not c.passed:
                lines.append(f"      - {c.name}: {c.measured:.6g} "
                             f"{c.comparator} {c.threshold:.6g} fails")
    return "\n".join(lines)
