"""Backend selection for the geometry kernels.

The compiled extension is used when it was built and ``SKAM_PURE_PYTHON`` is
unset; otherwise the NumPy fallback is used.
"""

import os

from . import _kernels_py

BACKEND = "python"
_impl = _kernels_py

if not os.environ.get("SKAM_PURE_PYTHON"):
    try:
        from . import _kernels as _compiled
    except ImportError:
        pass
    else:
        _impl = _compiled
        BACKEND = "compiled"

zone_any = _impl.zone_any
interval_union_length = _impl.interval_union_length

__all__ = ["BACKEND", "zone_any", "interval_union_length"]
