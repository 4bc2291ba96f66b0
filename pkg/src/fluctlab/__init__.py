"""Fluctuation theory of walks and chains killed at the nonpositive axis.

Exact dynamic programming for killed lattice walks, generating-function
factorisation of the step law, harmonic functions and superharmonic
envelopes, conditioned (reweighted) processes, and Monte Carlo with
counter-based seeding.  Compiled kernels are used when the extension
built; set FLUCTLAB_FORCE_PURE=1 to insist on the numpy fallback.
"""

import os as _os

# Honour the thread cap before numpy configures its pools.
_threads = _os.environ.get("FLUCTLAB_THREADS")
if _threads:
    for _var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS",
                 "MKL_NUM_THREADS", "NUMEXPR_NUM_THREADS"):
        _os.environ.setdefault(_var, _threads)
del _os, _threads

from ._backend import BACKEND_NAME
from .errors import (AssumptionViolated, CertificateFailure, ConfigError,
                     FluctError)
from .steplaw import (StepLaw, Pmf, step_law, parse_law, ssrw, left23,
                      uniform3, walk_marginals)
from .killedwalk import (BoundarySpec, KilledProfile, survival_profile,
                         moving_boundary_profile, conditional_pmf)
from .wienerhopf import (wh_identity_residual, spitzer_survival_series,
                         dual_factorisation_check, renewal_function)
from .harmonic import build_majorant, estimate_v, structural_h
from .universal import (IidSequence, MarginalJumpSequence, CauchySequence,
                        divergence_diagnostic, simulate_passage)
from .chain import (ChainKernel, ssrw_kernel, region_switched_kernel,
                    kernel_from_spec, kernel_validate, build_chain_W,
                    chain_V, chain_survival, doob_chain_step,
                    doob_limit_check, clt_diagnostic)
from .config import ExperimentConfig, ResultRecord, ResultStore

__version__ = "0.1.0"

__all__ = [
    "BACKEND_NAME", "__version__",
    "FluctError", "AssumptionViolated", "CertificateFailure", "ConfigError",
    "StepLaw", "Pmf", "step_law", "parse_law", "ssrw", "left23", "uniform3",
    "walk_marginals",
    "BoundarySpec", "KilledProfile", "survival_profile",
    "moving_boundary_profile", "conditional_pmf",
    "wh_identity_residual", "spitzer_survival_series",
    "dual_factorisation_check", "renewal_function",
    "build_majorant", "estimate_v", "structural_h",
    "IidSequence", "MarginalJumpSequence", "CauchySequence",
    "divergence_diagnostic", "simulate_passage",
    "ChainKernel", "ssrw_kernel", "region_switched_kernel",
    "kernel_from_spec", "kernel_validate", "build_chain_W", "chain_V",
    "chain_survival", "doob_chain_step", "doob_limit_check",
    "clt_diagnostic",
    "ExperimentConfig", "ResultRecord", "ResultStore",
]
