"""Kernel backend selection.

The compiled ``_core`` extension is used when it imports; otherwise the numpy
implementation in ``_core_py``.  Setting ``GAUSSCHAIN_BACKEND=python`` forces
the fallback.  Callers look the backend up through :func:`get` at call time,
so :func:`use` switches every module at once.
"""

import contextlib
import os

from . import _core_py

try:
    from . import _core as _compiled
except ImportError:  # extension not built
    _compiled = None

_available = {"python": _core_py}
if _compiled is not None:
    _available["cython"] = _compiled


def available():
    return sorted(_available)


def _default():
    forced = os.environ.get("GAUSSCHAIN_BACKEND")
    if forced:
        if forced not in _available:
            raise ImportError(f"GAUSSCHAIN_BACKEND={forced!r} is not available ({available()})")
        return _available[forced]
    return _compiled if _compiled is not None else _core_py


_current = _default()


def get():
    return _current


def name():
    return _current.BACKEND


def set_backend(backend):
    global _current
    if backend not in _available:
        raise ValueError(f"backend {backend!r} not available; choose from {available()}")
    _current = _available[backend]


@contextlib.contextmanager
def use(backend):
    """Temporarily switch the kernel backend."""
    global _current
    prev = _current
    set_backend(backend)
    try:
        yield
    finally:
        _current = prev
