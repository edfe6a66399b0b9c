"""Kernel selection: compiled extension if available, numpy fallback otherwise.

Set HOLONOMY_LAB_PURE_PY=1 to force the fallback (used by the benchmark
and to debug suspected extension issues).
"""

import os

if os.environ.get("HOLONOMY_LAB_PURE_PY") == "1":
    from . import _kernels_py as _impl
else:
    try:
        from . import _kernels as _impl  # type: ignore[attr-defined]
    except ImportError:
        from . import _kernels_py as _impl

eval_trig_series = _impl.eval_trig_series
eval_trig_series_pair = _impl.eval_trig_series_pair
KERNEL_IMPLEMENTATION = _impl.IMPLEMENTATION

__all__ = ["eval_trig_series", "eval_trig_series_pair", "KERNEL_IMPLEMENTATION"]
