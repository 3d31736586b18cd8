"""Kernel backend selection.

The compiled ``_ckernels`` extension is used when it imports; otherwise the
numpy fallback is used.  ``MARKOVIANIZE_BACKEND=python`` forces the fallback.
"""
from __future__ import annotations

import os
from types import ModuleType

from . import _pykernels


def _select() -> tuple[str, ModuleType]:
    if os.environ.get("MARKOVIANIZE_BACKEND", "").lower() == "python":
        return "python", _pykernels
    try:
        from . import _ckernels
    except ImportError:
        return "python", _pykernels
    return "cython", _ckernels


BACKEND, kernels = _select()


def get(name: str) -> ModuleType:
    """Kernel module by name (``"python"`` or ``"cython"``), for benchmarks and tests."""
    if name == "python":
        return _pykernels
    if name == "cython":
        from . import _ckernels
        return _ckernels
    raise ValueError(f"unknown backend {name!r}")
