"""Select the compiled kernels when available, else the numpy fallback.

Set ``DOMATIC_PURE_PYTHON=1`` to force the fallback.
"""

import importlib
import os

from . import _pykernels

BACKENDS = ("cython", "python")


def load(name):
    if name == "python":
        return _pykernels
    if name == "cython":
        return importlib.import_module("domatic._ckernels")
    raise ValueError(f"unknown backend {name!r}; expected one of {BACKENDS}")


def available():
    names = ["python"]
    try:
        load("cython")
    except ImportError:
        pass
    else:
        names.insert(0, "cython")
    return names


def _default():
    if os.environ.get("DOMATIC_PURE_PYTHON", "") not in ("", "0"):
        return "python", _pykernels
    try:
        return "cython", load("cython")
    except ImportError:
        return "python", _pykernels


BACKEND, kernels = _default()


def use(name):
    """Switch the process-wide backend; returns the previous name."""
    global BACKEND, kernels
    previous = BACKEND
    kernels = load(name)
    BACKEND = name
    return previous
