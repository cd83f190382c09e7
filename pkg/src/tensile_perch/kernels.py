"""Kernel selection: the compiled extension when built, pure Python otherwise.

Set ``TENSILE_PERCH_PURE_PYTHON=1`` to force the fallback.
"""

import os

from tensile_perch import _kernels_py
from tensile_perch._kernels_py import CONTACT_MARGIN, PenetrationError

_impl = _kernels_py
if os.environ.get("TENSILE_PERCH_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from tensile_perch import _ckernels as _impl  # type: ignore[no-redef]
    except ImportError:
        pass

BACKEND = "cython" if _impl is not _kernels_py else "python"

angle_delta = _impl.angle_delta
accumulate_wrap = _impl.accumulate_wrap
wrap_geometry = _impl.wrap_geometry
tether_step = _impl.tether_step

__all__ = [
    "BACKEND", "CONTACT_MARGIN", "PenetrationError",
    "accumulate_wrap", "angle_delta", "tether_step", "wrap_geometry",
]
