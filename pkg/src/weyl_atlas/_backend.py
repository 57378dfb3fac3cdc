"""Kernel backend selection.

The compiled Cython extension is used when importable; set
``WEYL_ATLAS_PURE=1`` to force the numpy fallback.
"""
import os

from . import _pykernels

if os.environ.get("WEYL_ATLAS_PURE", "") == "1":
    _impl = _pykernels
    NAME = "python"
else:
    try:
        from . import _ckernels as _impl
        NAME = "cython"
    except ImportError:  # extension not built
        _impl = _pykernels
        NAME = "python"

count_real_roots_batch = _impl.count_real_roots_batch
pfaffian_batch = _impl.pfaffian_batch
