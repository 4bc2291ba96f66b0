"""Kernel backend selection.

Tries the compiled extension first, falls back to the numpy implementation.
Set FLUCTLAB_FORCE_PURE=1 to force the fallback (used by the equivalence
tests and the benchmark).
"""

from __future__ import annotations

import os

from . import _kernels_py

if os.environ.get("FLUCTLAB_FORCE_PURE") == "1":
    _impl = _kernels_py
else:
    try:
        from . import _ckernels as _impl  # type: ignore[no-redef]
    except ImportError:
        _impl = _kernels_py

BACKEND_NAME: str = _impl.BACKEND_NAME
dp_killed = _impl.dp_killed
mc_walk = _impl.mc_walk
mc_chain = _impl.mc_chain


def backends():
    """All importable backends, for equivalence tests and benchmarks."""
    out = {"python": _kernels_py}
    try:
        from . import _ckernels
        out["compiled"] = _ckernels
    except ImportError:
        pass
    return out
