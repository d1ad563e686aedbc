"""Kernel backend selection.

The hot numeric kernels exist twice: a compiled Cython extension
(ce_lcrt._kernels) and a pure-Python mirror (ce_lcrt._kernels_py).
The compiled backend is preferred when importable; set CE_LCRT_FORCE_PY=1
to force the pure-Python fallback.
"""

from __future__ import annotations

import os

if os.environ.get("CE_LCRT_FORCE_PY") == "1":
    from . import _kernels_py as kernels

    BACKEND = "python"
else:
    try:
        from . import _kernels as kernels  # type: ignore[attr-defined]

        BACKEND = "cython"
    except ImportError:
        from . import _kernels_py as kernels

        BACKEND = "python"

__all__ = ["kernels", "BACKEND"]
