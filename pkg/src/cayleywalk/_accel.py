"""Optional numba acceleration.

Kernels are written once as plain Python over numpy arrays and decorated with
:func:`jit`. When numba is importable and ``CAYLEYWALK_NO_NUMBA`` is unset (or
``0``), they are compiled with ``numba.njit``; otherwise the same function runs
as ordinary Python. Kernels never draw random numbers themselves, so both paths
produce identical output for identical inputs.
"""
from __future__ import annotations

import os

_FLAG = "CAYLEYWALK_NO_NUMBA"


def _numba_requested() -> bool:
    return os.environ.get(_FLAG, "0").strip().lower() in ("", "0", "false", "no")


try:
    if not _numba_requested():
        raise ImportError
    import numba as _numba
except ImportError:
    _numba = None

USING_NUMBA = _numba is not None


def jit(fn):
    if _numba is None:
        return fn
    return _numba.njit(cache=True)(fn)
