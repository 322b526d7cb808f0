"""Hot loops, each with a numba implementation and a pure-numpy twin.

The public name in every kernel module dispatches on
:func:`netdiscover._jit.backend`; the ``*_numba`` and ``*_numpy`` variants are
importable directly for cross-checking and benchmarks.
"""
