"""Hot numeric kernels with a numba path and a pure-numpy fallback.

The backend is chosen once at import time from ``ONEBIT_USE_NUMBA``
("0" forces numpy; anything else uses numba when it is importable).
"""

import os

from . import _numpy

try:
    from . import _numba
except ImportError:  # pragma: no cover - numba is a declared dependency
    _numba = None

USE_NUMBA = os.environ.get("ONEBIT_USE_NUMBA", "1") != "0" and _numba is not None

_impl = _numba if USE_NUMBA else _numpy
BACKEND = "numba" if USE_NUMBA else "numpy"

measurement_sums = _impl.measurement_sums
adaptive_trace = _impl.adaptive_trace


def backends():
    """Mapping of available backend name -> module."""
    out = {"numpy": _numpy}
    if _numba is not None:
        out["numba"] = _numba
    return out


__all__ = ["BACKEND", "USE_NUMBA", "adaptive_trace", "backends", "measurement_sums"]
