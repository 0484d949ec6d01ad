"""Kernel selection: compiled extension when importable, numpy otherwise.

Set ``MHDLIMIT_PURE_PYTHON=1`` to force the numpy versions.
"""
from __future__ import annotations

import os

from . import _kernels_py

BACKEND = "python"
if os.environ.get("MHDLIMIT_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _kernels as _impl

        BACKEND = "compiled"
    except ImportError:
        _impl = _kernels_py
else:
    _impl = _kernels_py

tricubic_periodic = _impl.tricubic_periodic
sign_change_cells = _impl.sign_change_cells

__all__ = ["BACKEND", "tricubic_periodic", "sign_change_cells"]
