"""Kernel backend selection.

Every hot kernel exists twice: explicit loops compiled with numba, and a
vectorized numpy/scipy path. The default comes from the ``PRIVIMMUNE_BACKEND``
environment variable (``numba`` or ``numpy``); without numba installed the
numpy path is always used.
"""

from __future__ import annotations

import contextlib
import os

try:
    import numba
except ImportError:  # pragma: no cover - numba is a hard dependency in practice
    numba = None

ENV_VAR = "PRIVIMMUNE_BACKEND"
BACKENDS = ("numba", "numpy")


def _initial_backend() -> str:
    name = os.environ.get(ENV_VAR, "numba").strip().lower() or "numba"
    if name not in BACKENDS:
        raise ValueError(f"{ENV_VAR} must be one of {BACKENDS}, got {name!r}")
    if name == "numba" and numba is None:
        return "numpy"
    return name


_backend = _initial_backend()


def backend() -> str:
    return _backend


def set_backend(name: str) -> None:
    global _backend
    if name not in BACKENDS:
        raise ValueError(f"unknown backend {name!r}")
    if name == "numba" and numba is None:
        raise RuntimeError("numba is not installed")
    _backend = name


@contextlib.contextmanager
def use_backend(name: str):
    previous = _backend
    set_backend(name)
    try:
        yield
    finally:
        set_backend(previous)


def njit(fn):
    """Compile ``fn`` with numba when available; return it untouched otherwise."""
    if numba is None:
        return fn
    return numba.njit(cache=True, nogil=True)(fn)
