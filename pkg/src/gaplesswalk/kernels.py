"""Select the compiled kernels when available, the numpy twins otherwise.

Set ``GAPLESSWALK_PURE_PYTHON=1`` to force the fallback.
"""
from __future__ import annotations

import os

from . import _kernels_py

BACKEND = "python"
if os.environ.get("GAPLESSWALK_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _kernels as _compiled  # type: ignore[attr-defined]
    except ImportError:
        _compiled = None
    else:
        BACKEND = "cython"
else:
    _compiled = None

_impl = _compiled if _compiled is not None else _kernels_py

winding_and_gap = _impl.winding_and_gap
arc_angle_sum = _impl.arc_angle_sum

__all__ = ["BACKEND", "winding_and_gap", "arc_angle_sum"]
