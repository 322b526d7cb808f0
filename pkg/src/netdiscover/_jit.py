"""Backend selection for the numeric kernels.

Every hot kernel ships twice: a numba ``@njit`` loop version and a pure-numpy
version.  ``NETDISCOVER_BACKEND=numpy`` forces the numpy path; otherwise numba
is used when it imports cleanly.
"""
import os

try:
    from numba import njit

    HAS_NUMBA = True
except ImportError:  # pragma: no cover - numba is optional
    HAS_NUMBA = False

    def njit(*args, **kwargs):
        if len(args) == 1 and callable(args[0]) and not kwargs:
            return args[0]
        return lambda f: f


_VALID = ("numba", "numpy")


def _initial_backend():
    requested = os.environ.get("NETDISCOVER_BACKEND", "").strip().lower()
    if requested and requested not in _VALID:
        raise ValueError(f"NETDISCOVER_BACKEND must be one of {_VALID}, got {requested!r}")
    if requested == "numpy" or not HAS_NUMBA:
        return "numpy"
    return "numba"


_backend = _initial_backend()


def backend():
    return _backend


def set_backend(name):
    """Switch kernels at runtime; returns the previous backend name."""
    global _backend
    if name not in _VALID:
        raise ValueError(f"backend must be one of {_VALID}")
    if name == "numba" and not HAS_NUMBA:
        raise RuntimeError("numba is not installed")
    prev, _backend = _backend, name
    return prev


def use_numba():
    return _backend == "numba"
