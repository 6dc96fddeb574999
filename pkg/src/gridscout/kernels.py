"""Kernel dispatch: compiled extension when present, pure Python otherwise.

Set ``GRIDSCOUT_PURE_PYTHON=1`` to force the fallback (used by the kernel
benchmark and the parity tests).
"""

from __future__ import annotations

import os

if os.environ.get("GRIDSCOUT_PURE_PYTHON"):
    from gridscout import _fallback as _impl
else:
    try:
        from gridscout import _native as _impl  # type: ignore[attr-defined]
    except ImportError:
        from gridscout import _fallback as _impl

ACTIVE_BACKEND: str = _impl.BACKEND

shape_moments = _impl.shape_moments
outer_product = _impl.outer_product
coverage_weight = _impl.coverage_weight
