"""Backend selection for the matching kernels.

The compiled extension is preferred; set FEDSCHED_PURE_PY=1 to force the
pure-Python fallback (used by the benchmark and backend-parity tests).
"""

import os

if os.environ.get("FEDSCHED_PURE_PY"):
    from . import kernels_py as _impl

    BACKEND = "python"
else:
    try:
        from . import _kernels as _impl

        BACKEND = "cython"
    except ImportError:
        from . import kernels_py as _impl

        BACKEND = "python"

matching_at_threshold = _impl.matching_at_threshold
bottleneck_assignment = _impl.bottleneck_assignment
greedy_assignment = _impl.greedy_assignment
