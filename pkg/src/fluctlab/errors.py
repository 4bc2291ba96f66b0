"""Error taxonomy for the library.

Errors fall into two deliberately separate groups: assumption violations
(the input is outside the regime the methods are valid for) and numeric
certificate failures (the computation ran but could not certify its target
accuracy).  The CLI maps the groups to distinct exit codes.
"""


class FluctError(Exception):
    """Base class for all library errors."""


class AssumptionViolated(FluctError):
    """Input violates a structural assumption (moments, support, shape)."""


class DegenerateLaw(AssumptionViolated):
    """Step law is a single atom at zero; no fluctuation structure exists."""


class NonCentered(AssumptionViolated):
    """Operation requires a zero-mean step law."""


class NonLattice(AssumptionViolated):
    """Operation requires an integer-lattice step law."""


class NotLeftContinuous(AssumptionViolated):
    """Operation requires all downward jumps to have size exactly one."""


class NonSummable(AssumptionViolated):
    """Renewal sum cannot converge (ladder magnitude is zero a.s.)."""


class NoValidR(AssumptionViolated):
    """No shift R satisfies the chain superharmonicity side conditions."""


class VUnavailable(AssumptionViolated):
    """Harmonic-function table does not cover a reachable state."""


class ConfigError(FluctError):
    """Malformed experiment configuration: parse failure, missing or
    unknown field, or a law/kernel spec that does not resolve.

    The CLI reports these as usage errors (exit code 1)."""


class CertificateFailure(FluctError):
    """Computation finished but failed its numeric certificate."""


class WindowTooSmall(CertificateFailure):
    """Requested state window loses more mass than the tolerance allows."""


class ZeroSurvival(CertificateFailure):
    """Conditioning event has zero probability at the requested horizon."""


class SuperharmonicityViolated(CertificateFailure):
    """Grid verification of the supermartingale drift inequality failed."""


class GridTooCoarse(CertificateFailure):
    """Verification grid misses structure (atoms) it must resolve."""


class InsufficientRange(CertificateFailure):
    """Tail-index fit was asked for on too short an n-range."""


class TooFewSurvivors(CertificateFailure):
    """Conditional empirical law is based on too small a survivor sample."""
