"""Hot loops for corner scoring and optical-flow tracking.

The compiled extension is used when it was built; otherwise the numpy
fallback is imported.  Set ``MONOFOLLOW_PURE_PYTHON=1`` to force the
fallback.
"""
import os

from . import _pykernels

BACKEND = "python"
_impl = _pykernels

if os.environ.get("MONOFOLLOW_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _ckernels as _impl  # noqa: F811
    except ImportError:
        pass
    else:
        BACKEND = "cython"

min_eig_response = _impl.min_eig_response
lk_track_level = _impl.lk_track_level

CONVERGED = _pykernels.CONVERGED
SINGULAR = _pykernels.SINGULAR
EXHAUSTED = _pykernels.EXHAUSTED
LOST = _pykernels.LOST


def backends():
    """Every importable backend as ``{name: module}``."""
    found = {"python": _pykernels}
    try:
        from . import _ckernels
    except ImportError:
        pass
    else:
        found["cython"] = _ckernels
    return found
