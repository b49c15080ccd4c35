"""Kernel backend selection.

The compiled extension is used when importable; otherwise, or when
``COMPLAINT_INSIGHT_PURE=1`` is set, the numpy fallback is used. Both
backends produce bit-identical results.
"""
import os

from . import _fallback

try:
    if os.environ.get("COMPLAINT_INSIGHT_PURE", "") not in ("", "0"):
        raise ImportError("pure backend requested")
    from . import _kernels as _impl

    BACKEND = "compiled"
except ImportError:
    _impl = _fallback
    BACKEND = "python"

BACKENDS = {"python": _fallback}
if BACKEND == "compiled":
    BACKENDS["compiled"] = _impl
else:
    try:
        from . import _kernels as _compiled
        BACKENDS["compiled"] = _compiled
    except ImportError:
        pass

scan_gini = _impl.scan_gini
scan_sse = _impl.scan_sse
gibbs_sweep = _impl.gibbs_sweep
pegasos_epoch = _impl.pegasos_epoch

__all__ = ["BACKEND", "BACKENDS", "scan_gini", "scan_sse", "gibbs_sweep", "pegasos_epoch"]
