"""Optional numba acceleration.

Set ``PA_PATCH_DISABLE_NUMBA=1`` before import to force the pure-numpy
kernels, e.g. on platforms without numba or when debugging.
"""
import os

_FALSY = ("", "0", "false", "no", "off")

try:
    import numba  # noqa: F401
    from numba import njit as _njit

    NUMBA_INSTALLED = True
except ImportError:  # pragma: no cover - numba is a hard dependency in CI
    NUMBA_INSTALLED = False
    _njit = None

DISABLED_BY_ENV = os.environ.get("PA_PATCH_DISABLE_NUMBA", "").strip().lower() not in _FALSY
USE_NUMBA = NUMBA_INSTALLED and not DISABLED_BY_ENV


def optional_njit(*args, **kwargs):
    """``numba.njit`` when available, identity otherwise.

    The undecorated Python function is kept as ``.py_func`` in both cases so
    tests can run the interpreted loop against the compiled one.
    """

    def decorator(func):
        if NUMBA_INSTALLED:
            return _njit(*args, **kwargs)(func)
        func.py_func = func
        return func

    return decorator


def backend():
    return "numba" if USE_NUMBA else "numpy"
