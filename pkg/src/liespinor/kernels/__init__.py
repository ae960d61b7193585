"""Hot inner loops with a compiled backend and a numpy fallback.

The compiled extension is used when it imports; set ``LIESPINOR_PURE=1``
to force the fallback.  ``BACKEND`` names the active implementation.
"""

from __future__ import annotations

import os

import numpy as np

from . import _fallback

try:
    if os.environ.get("LIESPINOR_PURE"):
        raise ImportError("pure backend requested")
    from . import _core as _impl

    BACKEND = "compiled"
except ImportError:  # pragma: no cover - depends on the build
    _impl = _fallback
    BACKEND = "python"

__all__ = ["BACKEND", "rk4_profile", "tree_products", "plaquette_holonomy", "backends"]


def backends() -> dict:
    """Available implementations keyed by name (for benchmarks and tests)."""
    out = {"python": _fallback}
    if _impl is not _fallback:
        out["compiled"] = _impl
    return out


def rk4_profile(u0, v0, s0, sg0, h, smax, nmax, impl=None):
    return (impl or _impl).rk4_profile(float(u0), float(v0), float(s0), float(sg0), float(h), float(smax), int(nmax))


def tree_products(Su, Sv, f0, left: bool = False, impl=None):
    Su = np.ascontiguousarray(Su, dtype=complex)
    Sv = np.ascontiguousarray(Sv, dtype=complex)
    f0 = np.ascontiguousarray(f0, dtype=complex)
    return (impl or _impl).tree_products(Su, Sv, f0, bool(left))


def plaquette_holonomy(Su, Sv, left: bool = False, impl=None):
    Su = np.ascontiguousarray(Su, dtype=complex)
    Sv = np.ascontiguousarray(Sv, dtype=complex)
    return (impl or _impl).plaquette_holonomy(Su, Sv, bool(left))
