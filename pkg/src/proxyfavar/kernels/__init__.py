"""Hot loops of the sampler with a compiled backend and a NumPy fallback.

The compiled extension is used when it was built and ``PROXYFAVAR_PURE_PYTHON``
is unset; otherwise the NumPy reference versions are used.
"""
import os

from . import _py

BACKEND = "python"
if os.environ.get("PROXYFAVAR_PURE_PYTHON", "") in ("", "0"):
    try:
        from . import _ckernels as _impl

        BACKEND = "cython"
    except ImportError:
        _impl = _py
else:
    _impl = _py

tridiag_precision_draw = _impl.tridiag_precision_draw
mixture_indicator_draw = _impl.mixture_indicator_draw

__all__ = ["BACKEND", "tridiag_precision_draw", "mixture_indicator_draw"]
