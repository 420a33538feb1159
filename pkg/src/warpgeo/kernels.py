"""Kernel selection: the compiled extension when importable, numpy otherwise.

Set ``WARPGEO_PURE=1`` to force the numpy implementation.
"""
import os

from . import _kernels_py

BACKEND = "python"
shoot_fan = _kernels_py.shoot_fan
fan_min_length = _kernels_py.fan_min_length

if os.environ.get("WARPGEO_PURE", "") not in ("1", "true", "yes"):
    try:
        from . import _kernels as _compiled
    except ImportError:  # extension not built
        _compiled = None
    if _compiled is not None:
        shoot_fan = _compiled.shoot_fan
        fan_min_length = _compiled.fan_min_length
        BACKEND = "cython"

table_eval = _kernels_py.table_eval
