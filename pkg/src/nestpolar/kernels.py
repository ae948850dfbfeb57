"""Backend selection for the SC hot loop.

The compiled Cython kernel is used when importable; setting the environment
variable ``NESTPOLAR_PURE_PYTHON=1`` forces the numpy fallback.
"""
from __future__ import annotations

import os

from . import _pykernels

if os.environ.get("NESTPOLAR_PURE_PYTHON"):
    _backend = None
else:
    try:
        from . import _ckernels as _backend
    except ImportError:
        _backend = None

BACKEND = "cython" if _backend is not None else "numpy"

if _backend is not None:
    sc_decode_batch = _backend.sc_decode_batch
else:
    sc_decode_batch = _pykernels.sc_decode_batch

sc_decode_batch_numpy = _pykernels.sc_decode_batch
sc_decode_batch_compiled = _backend.sc_decode_batch if _backend is not None else None
