"""Selects between the numba kernels and the pure-numpy fallback.

The default backend is read once from the TREESCAN_BACKEND environment
variable ("numba" or "numpy"); unset means numba when importable, numpy
otherwise. `set_backend` switches at runtime, which the benchmark's
backend-comparison mode relies on. Both kernel modules expose the same
functions and apply floating-point operations in the same order, so
results agree across backends.
"""

from __future__ import annotations

import importlib
import os
from types import ModuleType

try:
    import numba  # noqa: F401

    _HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a hard dep, but stay usable
    _HAVE_NUMBA = False

VALID_BACKENDS = ("numba", "numpy")
_active: str | None = None


def numba_available() -> bool:
    return _HAVE_NUMBA


def _validate(name: str) -> str:
    name = name.strip().lower()
    if name not in VALID_BACKENDS:
        raise ValueError(f"backend must be one of {VALID_BACKENDS}, got {name!r}")
    if name == "numba" and not _HAVE_NUMBA:
        raise ValueError("numba backend requested but numba is not importable")
    return name


def active_backend() -> str:
    """Name of the backend kernels currently in use."""
    global _active
    if _active is None:
        requested = os.environ.get("TREESCAN_BACKEND", "").strip()
        if requested:
            _active = _validate(requested)
        else:
            _active = "numba" if _HAVE_NUMBA else "numpy"
    return _active


def set_backend(name: str) -> None:
    global _active
    _active = _validate(name)


def kernels() -> ModuleType:
    """Kernel module for the active backend."""
    if active_backend() == "numba":
        return importlib.import_module("treescan._kernels_numba")
    return importlib.import_module("treescan._kernels_numpy")
