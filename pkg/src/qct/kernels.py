"""Backend selection for the batched register kernels.

The compiled core (``qct._ckernels``) is used when it was built; otherwise
the numpy implementation in ``qct._pykernels`` is loaded. Set
``QCT_BACKEND=python`` to force the fallback.
"""
from __future__ import annotations

import contextlib
import importlib
import os

from qct import _pykernels

BACKENDS = ("cython", "python")


def _load(name: str):
    if name == "python":
        return _pykernels
    if name == "cython":
        return importlib.import_module("qct._ckernels")
    raise ValueError(f"unknown backend {name!r}; choose from {BACKENDS}")


def available() -> list[str]:
    names = []
    for name in BACKENDS:
        try:
            _load(name)
        except ImportError:
            continue
        names.append(name)
    return names


def _initial():
    wanted = os.environ.get("QCT_BACKEND", "").strip().lower()
    if wanted:
        return wanted, _load(wanted)
    try:
        return "cython", _load("cython")
    except ImportError:
        return "python", _pykernels


BACKEND, _impl = _initial()


def set_backend(name: str) -> None:
    global BACKEND, _impl
    _impl = _load(name)
    BACKEND = name


@contextlib.contextmanager
def use_backend(name: str):
    previous = BACKEND
    set_backend(name)
    try:
        yield
    finally:
        set_backend(previous)


def apply_pauli(rho, idx, side, ops):
    _impl.apply_pauli(rho, idx, int(side), ops)


def measure(rho, idx, side, axes, uniforms):
    return _impl.measure(rho, idx, int(side), axes, uniforms)


def depolarize(rho, idx, side, p):
    _impl.depolarize(rho, idx, int(side), float(p))
