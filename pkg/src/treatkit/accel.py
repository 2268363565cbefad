"""Kernel compilation switch.

Hot numeric loops (tree building, tree prediction, Shapley traversal) are
written as numba-compatible functions and compiled with ``@jit``. Setting the
environment variable ``TREATKIT_NO_NUMBA=1`` before import keeps them as plain
Python/numpy, which is slower but dependency-light and bit-compatible on
continuous data. ``fn.py_func`` is available on compiled kernels for
side-by-side comparison in tests and benchmarks.
"""

import os

_DISABLED = os.environ.get("TREATKIT_NO_NUMBA", "").lower() in {"1", "true", "yes"}

if not _DISABLED:
    try:
        from numba import njit as _njit
    except ImportError:  # pragma: no cover
        _njit = None
else:
    _njit = None

JIT_ENABLED = _njit is not None


def jit(func):
    """Compile with numba when enabled, otherwise return func unchanged."""
    if JIT_ENABLED:
        return _njit(cache=True)(func)
    func.py_func = func
    return func
