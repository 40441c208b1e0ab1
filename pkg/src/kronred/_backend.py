"""Kernel backend selection.

The compiled extension is used when importable unless ``KRONRED_PURE_PYTHON``
is set to a non-empty value other than ``0``.
"""

from __future__ import annotations

import os
from types import ModuleType

from . import _pykernels

try:
    from . import _ckernels
except ImportError:  # extension not built
    _ckernels = None

kernels: ModuleType
name: str


def available() -> list[str]:
    return ["python"] + (["cython"] if _ckernels is not None else [])


def use(backend: str) -> None:
    """Switch the active backend (``"cython"`` or ``"python"``)."""
    global kernels, name
    if backend == "cython":
        if _ckernels is None:
            raise RuntimeError("compiled kernels are not built")
        kernels, name = _ckernels, "cython"
    elif backend == "python":
        kernels, name = _pykernels, "python"
    else:
        raise ValueError(f"unknown backend {backend!r}")


def get(backend: str) -> ModuleType:
    return _ckernels if backend == "cython" else _pykernels


_forced = os.environ.get("KRONRED_PURE_PYTHON", "")
use("python" if (_ckernels is None or _forced not in ("", "0")) else "cython")
