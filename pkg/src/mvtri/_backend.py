"""Kernel backend selection: compiled extension with a NumPy fallback.

The compiled module ``mvtri._core`` is optional.  When present it is used
by default; otherwise ``mvtri._pykernels`` serves the same interface.  The
environment variable MVTRI_BACKEND=python|compiled forces a choice at
import time, and set_backend() switches it at runtime (used by tests and
the backend benchmark).
"""
import os

from . import _pykernels

try:
    from . import _core
except ImportError:
    _core = None

kernels = _pykernels


def available_backends():
    names = ["python"]
    if _core is not None:
        names.insert(0, "compiled")
    return names


def backend_name():
    return kernels.BACKEND_NAME


def set_backend(name):
    global kernels
    if name == "python":
        kernels = _pykernels
    elif name == "compiled":
        if _core is None:
            raise ValueError("compiled backend is not built")
        kernels = _core
    else:
        raise ValueError(f"unknown backend {name!r}")


_forced = os.environ.get("MVTRI_BACKEND", "").strip().lower()
if _forced:
    set_backend(_forced)
else:
    kernels = _core if _core is not None else _pykernels
