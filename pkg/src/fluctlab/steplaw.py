"""Finite-atom step laws, their arithmetic periodicity, and walk marginals.

A step law is an immutable finite list of (value, probability) atoms, either
on the integer lattice or with real atom positions.  Probabilities may carry
exact rational values alongside their float64 images; moments are computed
exactly whenever the inputs are exact.  Walk marginals (n-fold convolutions)
are dense float64 vectors with an integer offset; mass is never flushed to
zero below any threshold, truncation only ever happens through explicit
window arguments in the killed-walk module.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from .errors import DegenerateLaw, NonLattice

Rat = Fraction | int


@dataclass(frozen=True)
class StepLaw:
    """Immutable finite-atom step distribution.

    values are sorted ascending and unique; probs are float64 and sum to one
    within 1e-12.  exact holds the same probabilities as Fractions when every
    input probability was rational, else None.
    """

    kind: str  # "lattice" | "real"
    values: tuple
    probs: tuple
    exact: tuple | None = None

    def __post_init__(self):
        if self.kind not in ("lattice", "real"):
            raise ValueError(f"unknown law kind {self.kind!r}")
        if not self.values:
            raise ValueError("a step law needs at least one atom")
        if any(p < 0 for p in self.probs):
            raise ValueError("negative probability atom")
        if abs(sum(self.probs) - 1.0) > 1e-12:
            raise ValueError(f"probabilities sum to {sum(self.probs)!r}, not 1")
        if self.exact is not None and sum(self.exact) != 1:
            raise ValueError("exact probabilities do not sum to 1")

    @property
    def mean(self) -> float:
        return float(sum(v * p for v, p in zip(self.values, self.probs)))

    @property
    def variance(self) -> float:
        if self.exact is not None and self.kind == "lattice":
            mu = sum(Fraction(v) * q for v, q in zip(self.values, self.exact))
            return float(sum(q * (Fraction(v) - mu) ** 2
                             for v, q in zip(self.values, self.exact)))
        mu = self.mean
        return float(sum(p * (v - mu) ** 2 for v, p in zip(self.values, self.probs)))

    @property
    def mean_exact(self) -> Fraction | None:
        """Exact mean, available when probs are rational and atoms lattice."""
        if self.exact is None or self.kind != "lattice":
            return None
        return sum(Fraction(v) * q for v, q in zip(self.values, self.exact))

    def prob_of(self, value) -> float:
        for v, p in zip(self.values, self.probs):
            if v == value:
                return p
        return 0.0

    @property
    def min_step(self):
        return self.values[0]

    @property
    def max_step(self):
        return self.values[-1]

    def negate(self) -> "StepLaw":
        """Law of -X (used to turn ascent problems into descent problems)."""
        vals = tuple(-v for v in reversed(self.values))
        probs = tuple(reversed(self.probs))
        exact = tuple(reversed(self.exact)) if self.exact is not None else None
        return StepLaw(self.kind, vals, probs, exact)

    def __repr__(self):
        body = ", ".join(f"{v}:{p:.6g}" for v, p in zip(self.values, self.probs))
        return f"StepLaw({self.kind}; {body})"


def step_law(atoms: Iterable[tuple], kind: str | None = None) -> StepLaw:
    """Build a StepLaw from (value, prob) pairs.

    Duplicate values are merged.  Probabilities given as Fraction/int (or
    strings like "2/3") keep an exact rational image; any float input drops
    exactness for the whole law.  kind defaults to "lattice" when every value
    is an integer.
    """
    merged: dict = {}
    all_rational = True
    for v, p in atoms:
        if isinstance(p, str):
            p = Fraction(p)
        if isinstance(p, float):
            all_rational = False
        if isinstance(v, float) and v.is_integer():
            v = int(v)
        merged[v] = merged.get(v, 0) + (Fraction(p) if not isinstance(p, float) else p)
    values = sorted(merged)
    if kind is None:
        kind = "lattice" if all(isinstance(v, int) for v in values) else "real"
    if kind == "lattice" and not all(isinstance(v, int) for v in values):
        raise NonLattice(f"lattice law with non-integer atoms {values!r}")
    probs = tuple(float(merged[v]) for v in values)
    exact = tuple(Fraction(merged[v]) for v in values) if all_rational else None
    return StepLaw(kind, tuple(values), probs, exact)


# Built-in laws used throughout the test and verification suites.

def ssrw() -> StepLaw:
    """Simple symmetric random walk step: +-1 with probability 1/2."""
    return step_law([(-1, Fraction(1, 2)), (1, Fraction(1, 2))])


def left23() -> StepLaw:
    """Left-continuous zero-mean law: -1 w.p. 2/3, +2 w.p. 1/3 (variance 2)."""
    return step_law([(-1, Fraction(2, 3)), (2, Fraction(1, 3))])


def uniform3() -> StepLaw:
    """Aperiodic zero-mean law: uniform on {-1, 0, 1} (variance 2/3)."""
    third = Fraction(1, 3)
    return step_law([(-1, third), (0, third), (1, third)])


BUILTIN_LAWS = {"ssrw": ssrw, "left23": left23, "uniform3": uniform3}

_ATOM_RE = re.compile(r"^\s*([+-]?\d+)\s*:\s*([0-9./]+)\s*$")


def parse_law(text: str) -> StepLaw:
    """Parse a law name ("ssrw") or inline atom list ("-1:2/3,2:1/3")."""
    name = text.strip().lower()
    if name in BUILTIN_LAWS:
        return BUILTIN_LAWS[name]()
    atoms = []
    for part in text.split(","):
        m = _ATOM_RE.match(part)
        if not m:
            raise ValueError(f"cannot parse law atom {part!r}")
        atoms.append((int(m.group(1)), Fraction(m.group(2))))
    return step_law(atoms)


def law_from_config(cfg: dict) -> StepLaw:
    """Build a law from a config mapping: {"kind": ..., "atoms": [[v, p], ...]}.

    Probabilities may be numbers or exact-fraction strings like "2/3".
    """
    atoms = [(v, p) for v, p in cfg["atoms"]]
    return step_law(atoms, kind=cfg.get("kind"))


@dataclass(frozen=True)
class PeriodInfo:
    """Arithmetic structure of a lattice law: support lies in shift + d*Z.

    The time-n walk marginal is supported on reachable(n) = {x : d divides
    x - n*shift}.
    """

    d: int
    shift: int

    def supports(self, n: int, x: int) -> bool:
        return (x - n * self.shift) % self.d == 0


def period_shift(law: StepLaw) -> PeriodInfo:
    """Period d = gcd of support differences and the residue class shift.

    Single-atom laws carry no fluctuation structure: an atom at v != 0 gets
    the convention d = |v|, shift = 0; the atom at 0 is rejected outright.
    """
    if law.kind != "lattice":
        raise NonLattice("period analysis needs an integer lattice law")
    vals = law.values
    if len(vals) == 1:
        v = vals[0]
        if v == 0:
            raise DegenerateLaw("single atom at 0 has no period structure")
        return PeriodInfo(abs(v), 0)
    d = 0
    for v in vals[1:]:
        d = math.gcd(d, v - vals[0])
    return PeriodInfo(d, vals[0] % d)


@dataclass(frozen=True)
class Pmf:
    """Dense probability vector over consecutive lattice sites.

    probs[i] is the mass at site offset + i.  Total mass may be below one
    (sub-probability vectors arise from killed walks).
    """

    offset: int
    probs: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "probs", np.asarray(self.probs, dtype=np.float64))
        if self.probs.ndim != 1 or len(self.probs) == 0:
            raise ValueError("pmf needs a nonempty 1-d vector")
        if np.any(self.probs < 0):
            raise ValueError("negative mass in pmf")

    @property
    def support_end(self) -> int:
        return self.offset + len(self.probs)

    @property
    def mass(self) -> float:
        return float(self.probs.sum())

    def at(self, x: int) -> float:
        i = x - self.offset
        if 0 <= i < len(self.probs):
            return float(self.probs[i])
        return 0.0

    def mean(self) -> float:
        sites = np.arange(self.offset, self.support_end, dtype=np.float64)
        return float(sites @ self.probs)

    def tail_ge(self, x: int) -> float:
        """Mass at sites >= x."""
        i = max(0, x - self.offset)
        return float(self.probs[i:].sum())

    def cdf_le(self, x: int) -> float:
        """Mass at sites <= x."""
        i = x - self.offset + 1
        if i <= 0:
            return 0.0
        return float(self.probs[:i].sum())

    def sites(self) -> np.ndarray:
        return np.arange(self.offset, self.support_end)


def law_kernel(law: StepLaw) -> Pmf:
    """Dense jump kernel of a lattice law (zeros at skipped sites)."""
    if law.kind != "lattice":
        raise NonLattice("dense kernels exist only for lattice laws")
    lo, hi = law.values[0], law.values[-1]
    vec = np.zeros(hi - lo + 1)
    for v, p in zip(law.values, law.probs):
        vec[v - lo] = p
    return Pmf(lo, vec)


def convolve(a: Pmf, b: Pmf) -> Pmf:
    """Exact dense convolution; the window grows, nothing is truncated."""
    return Pmf(a.offset + b.offset, np.convolve(a.probs, b.probs))


def delta_pmf(x: int = 0) -> Pmf:
    return Pmf(x, np.ones(1))


def unconditional_pmf(law: StepLaw, n: int) -> Pmf:
    """Distribution of the free walk S(n) (n-fold convolution, n >= 0)."""
    if n < 0:
        raise ValueError("n must be nonnegative")
    out = delta_pmf(0)
    kernel = law_kernel(law)
    for _ in range(n):
        out = convolve(out, kernel)
    return out


def walk_marginals(law: StepLaw, n: int):
    """Yield (k, Pmf of S(k)) for k = 0..n without recomputing prefixes."""
    out = delta_pmf(0)
    kernel = law_kernel(law)
    yield 0, out
    for k in range(1, n + 1):
        out = convolve(out, kernel)
        yield k, out


def lclt_predictor(law: StepLaw, n: int, x: int) -> float:
    """Local-limit Gaussian prediction for P(S(n) = x) on the proper residue
    class, 0 off the class."""
    info = period_shift(law)
    if not info.supports(n, x):
        return 0.0
    mu, var = law.mean, law.variance
    if var <= 0:
        raise DegenerateLaw("zero-variance law has no Gaussian limit")
    z = (x - n * mu) ** 2 / (2.0 * n * var)
    return info.d / math.sqrt(2.0 * math.pi * n * var) * math.exp(-z)
