"""Backend selection for the hot loops.

The compiled extension is used when it imports; set ``MLSPEED_PURE_PYTHON=1``
to force the numpy fallback.
"""
import os

from . import _fallback

try:
    if os.environ.get("MLSPEED_PURE_PYTHON") == "1":
        raise ImportError("pure-Python backend requested")
    from . import _kernels
except ImportError:
    _kernels = None

_BACKENDS = {"python": _fallback}
if _kernels is not None:
    _BACKENDS["compiled"] = _kernels

BACKEND = "compiled" if _kernels is not None else "python"


def available_backends():
    return list(_BACKENDS)


def get_backend(name=None):
    name = BACKEND if name is None else name
    try:
        return _BACKENDS[name]
    except KeyError:
        raise ValueError(f"unknown or unavailable kernel backend '{name}' (have {available_backends()})") from None
