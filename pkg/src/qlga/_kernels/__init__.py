"""Kernel backend selection.

The compiled backend is used when the extension imports; set
``QLGA_BACKEND=python`` to force the NumPy fallback. ``QLGA_THREADS`` sets
the default thread count for the compiled kernels.
"""
from __future__ import annotations

import os
from types import ModuleType

from . import _pykernels

try:
    from . import _ckernels
except ImportError:  # extension not built
    _ckernels = None

BACKENDS: dict[str, ModuleType] = {"python": _pykernels}
if _ckernels is not None:
    BACKENDS["compiled"] = _ckernels

_state = {"backend": None, "threads": 1}


def available_backends() -> list[str]:
    return list(BACKENDS)


def set_backend(name: str) -> None:
    if name not in BACKENDS:
        raise ValueError(f"unknown or unavailable backend {name!r}; have {available_backends()}")
    _state["backend"] = name


def backend_name() -> str:
    return _state["backend"]


def get_backend(name: str | None = None) -> ModuleType:
    return BACKENDS[name or _state["backend"]]


def set_num_threads(n: int) -> None:
    _state["threads"] = max(1, int(n))


def num_threads() -> int:
    return _state["threads"]


def _init():
    want = os.environ.get("QLGA_BACKEND", "").strip().lower()
    if want in BACKENDS:
        _state["backend"] = want
    else:
        _state["backend"] = "compiled" if "compiled" in BACKENDS else "python"
    threads = os.environ.get("QLGA_THREADS")
    if threads:
        try:
            set_num_threads(int(threads))
        except ValueError:
            pass


_init()
