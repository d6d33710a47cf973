"""Kernel selection: the compiled extension when it imports, the numpy fallback otherwise.

Set ``COREAUDIT_PURE=1`` to force the fallback.
"""

from __future__ import annotations

import os

from . import _pykernels

_compiled = None
if os.environ.get("COREAUDIT_PURE", "") not in ("1", "true", "yes"):
    try:
        from . import _kernels as _compiled
    except ImportError:  # extension not built
        _compiled = None

_impl = _compiled if _compiled is not None else _pykernels
BACKEND: str = _impl.BACKEND

#: Largest quantized LP value the int64 separation path accepts.
_KC_INT64_LIMIT = 1 << 33


def scan_committees(U, thresh, size_lo, size_hi, h, start, stop):
    return _impl.scan_committees(U, thresh, size_lo, size_hi, h, start, stop)


def kc_separate(util, yq, zq, cap):
    if _impl is _compiled and (max(yq, default=0) >= _KC_INT64_LIMIT or zq >= _KC_INT64_LIMIT):
        return _pykernels.kc_separate(util, yq, zq, cap)
    return _impl.kc_separate(util, yq, zq, cap)


def implementations() -> dict:
    """Every importable backend, keyed by name (used by tests and the benchmark)."""
    out = {"python": _pykernels}
    if _compiled is not None:
        out["cython"] = _compiled
    else:
        try:
            from . import _kernels

            out["cython"] = _kernels
        except ImportError:
            pass
    return out
