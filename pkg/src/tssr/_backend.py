"""Kernel backend selection.

The compiled core is used when it imports; setting ``TSSR_FORCE_PYTHON=1``
selects the pure-Python fallback instead.
"""
import os

from tssr import _fallback

try:
    from tssr import _kernels as _compiled
except ImportError:  # extension not built
    _compiled = None

if _compiled is not None and not os.environ.get("TSSR_FORCE_PYTHON"):
    default = _compiled
    NAME = "compiled"
else:
    default = _fallback
    NAME = "python"


def available() -> dict:
    found = {"python": _fallback}
    if _compiled is not None:
        found["compiled"] = _compiled
    return found


def get(name=None):
    if name is None:
        return default
    try:
        return available()[name]
    except KeyError:
        raise ValueError(f"kernel backend {name!r} is not available") from None
