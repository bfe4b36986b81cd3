"""Kernel backend selection: numba JIT by default, plain numpy on request.

Set MARKETFLOW_DISABLE_JIT=1 to force the pure-numpy path (also used
automatically when numba is not importable). The flag is read once at
import time; both backends run the same kernel source.
"""

import os

__all__ = ["JIT_ENABLED", "BACKEND", "maybe_njit"]


def _jit_disabled_by_env() -> bool:
    value = os.environ.get("MARKETFLOW_DISABLE_JIT", "").strip().lower()
    return value in {"1", "true", "yes", "on"}


JIT_ENABLED = False
_njit = None
if not _jit_disabled_by_env():
    try:
        from numba import njit as _njit

        JIT_ENABLED = True
    except ImportError:
        _njit = None

BACKEND = "numba" if JIT_ENABLED else "numpy"


def maybe_njit(func):
    """Apply numba's njit when enabled, otherwise return func unchanged."""
    if JIT_ENABLED:
        return _njit(cache=True)(func)
    return func
