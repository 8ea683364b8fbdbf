"""Kernel dispatch: compiled ``_core`` when available, NumPy fallback otherwise.

Set ``HALOSIM_PURE_PYTHON=1`` to force the fallback.
"""

import os

from . import _pycore

BACKEND = "python"
_impl = _pycore

if not os.environ.get("HALOSIM_PURE_PYTHON"):
    try:
        from . import _core as _impl  # type: ignore[no-redef]

        BACKEND = "cython"
    except ImportError:  # pragma: no cover - depends on the build
        _impl = _pycore

closure_hops = _impl.closure_hops
grow_regions = _impl.grow_regions
refine = _impl.refine
edge_keys = _impl.edge_keys

__all__ = ["BACKEND", "closure_hops", "grow_regions", "refine", "edge_keys"]
