"""Backend selection for the batched flow/crossing kernel.

The compiled extension is used when it imports; set ``HOPFLINK_PURE=1`` to
force the numpy fallback.  ``BACKEND`` names the active one.
"""
import os

import numpy as np

from . import _fallback

if os.environ.get("HOPFLINK_PURE", "") not in ("", "0"):
    _compiled = None
else:
    try:
        from . import _kernels as _compiled
    except ImportError:  # extension not built
        _compiled = None

BACKEND = "compiled" if _compiled is not None else "python"
STATUS_OK = _fallback.STATUS_OK
STATUS_UNDERFLOW = _fallback.STATUS_UNDERFLOW
STATUS_MAX_STEPS = _fallback.STATUS_MAX_STEPS


def flow_crossings(*args, backend=None, **kw):
    """Dispatch to ``backend`` ("compiled" | "python"), default the active one."""
    if backend is None:
        backend = BACKEND
        if _compiled is not None and np.shape(args[1])[-1] > _compiled.MAXDIM:
            backend = "python"
    if backend == "compiled":
        if _compiled is None:
            raise RuntimeError("compiled kernel not available")
        return _compiled.flow_crossings(*args, **kw)
    return _fallback.flow_crossings(*args, **kw)
