"""Kernel backend selection.

Hot loops are written once as plain Python over numpy arrays and compiled
with numba when available. Setting ``LHTWPA_BACKEND=numpy`` (or
``LHTWPA_DISABLE_NUMBA=1``) forces the uncompiled reference path, which is
slower but has no numba dependency at runtime.
"""

import os

try:
    import numba

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None
    HAVE_NUMBA = False


def _env_backend():
    if os.environ.get("LHTWPA_DISABLE_NUMBA", "").strip() not in ("", "0"):
        return "numpy"
    name = os.environ.get("LHTWPA_BACKEND", "numba").strip().lower()
    if name not in ("numba", "numpy"):
        raise ValueError(f"LHTWPA_BACKEND must be 'numba' or 'numpy', got {name!r}")
    if name == "numba" and not HAVE_NUMBA:
        return "numpy"
    return name


_backend = _env_backend()


def get_backend():
    return _backend


def set_backend(name):
    """Override the backend chosen from the environment (used by benchmarks)."""
    global _backend
    if name not in ("numba", "numpy"):
        raise ValueError(f"unknown backend {name!r}")
    if name == "numba" and not HAVE_NUMBA:
        raise RuntimeError("numba is not installed")
    _backend = name


class Kernel:
    """A function with a lazily compiled numba twin.

    Calling the kernel dispatches on the active backend at call time, so
    tests and benchmarks can switch backends without re-importing.
    """

    def __init__(self, func, fallback=None, **jit_options):
        self.py_func = func
        self.fallback = fallback if fallback is not None else func
        self._jit_options = {"cache": True, "nogil": True, **jit_options}
        self._compiled = None
        self.__name__ = func.__name__
        self.__doc__ = func.__doc__

    @property
    def compiled(self):
        if self._compiled is None:
            self._compiled = numba.njit(**self._jit_options)(self.py_func)
        return self._compiled

    def __call__(self, *args):
        if _backend == "numba":
            return self.compiled(*args)
        return self.fallback(*args)


def kernel(func=None, *, fallback=None, **jit_options):
    """Decorator form of :class:`Kernel`.

    ``fallback`` names a separate numpy implementation used by the numpy
    backend; without it the undecorated source runs as-is.
    """
    if func is None:
        return lambda f: Kernel(f, fallback=fallback, **jit_options)
    return Kernel(func, fallback=fallback, **jit_options)
