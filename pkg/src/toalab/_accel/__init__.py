"""Backend selection for the hot numerical kernels.

The compiled Cython extension is preferred when present; otherwise the numpy
fallback is used.  Set TOALAB_BACKEND=fallback or TOALAB_BACKEND=compiled to
force a choice (forcing "compiled" raises if the extension is missing).
"""

import os

from . import fallback as _fallback

_requested = os.environ.get("TOALAB_BACKEND", "").strip().lower()

if _requested == "fallback":
    _impl = _fallback
    BACKEND = "fallback"
else:
    try:
        from . import _kernels as _impl  # type: ignore[attr-defined]
        BACKEND = "compiled"
    except ImportError:
        if _requested == "compiled":
            raise ImportError("TOALAB_BACKEND=compiled but the extension is not built")
        _impl = _fallback
        BACKEND = "fallback"

# The bilinear form is BLAS-bound: the batched matmul in the numpy
# implementation beats a fused scalar loop at every size worth running
# (see benchmarks/bench_backends.py), so both backends share it.  The
# extension still exports its own version for the benchmark comparison.
bilinear_phase_series = _fallback.bilinear_phase_series
envelope_sum = _impl.envelope_sum
envelope_pair_sum = _impl.envelope_pair_sum

__all__ = ["BACKEND", "bilinear_phase_series", "envelope_sum", "envelope_pair_sum", "fallback"]
