"""Kernel selection.

The compiled ``_kernels`` extension is used when it imports; otherwise the
numpy fallback. Set ``DICHANNEL_PURE=1`` to force the fallback.
"""
import os

from . import _fallback

transverse_max = _fallback.transverse_max

BACKEND = "python"
if not os.environ.get("DICHANNEL_PURE"):
    try:
        from . import _kernels as _impl

        BACKEND = "compiled"
    except ImportError:
        _impl = _fallback
else:
    _impl = _fallback

support_values = _impl.support_values
polygon_from_support = _impl.polygon_from_support
contact_points = _impl.contact_points
max_margins = _impl.max_margins
exact_margins = _impl.exact_margins
clip_convex = _impl.clip_convex
jacobi_eigvalsh = _impl.jacobi_eigvalsh

__all__ = [
    "BACKEND",
    "transverse_max",
    "support_values",
    "polygon_from_support",
    "contact_points",
    "max_margins",
    "exact_margins",
    "clip_convex",
    "jacobi_eigvalsh",
]
