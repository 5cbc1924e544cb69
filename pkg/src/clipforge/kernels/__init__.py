"""Kernel backend selection.

Two interchangeable implementations of the hot numeric kernels exist:

* ``pyref`` -- pure numpy, always available.
* ``_fastkern`` -- Cython extension compiled at install time.

The active backend is chosen at import time: the compiled extension when it
imported cleanly, numpy otherwise. CLIPFORGE_BACKEND=python|compiled forces
the choice (forcing ``compiled`` when the extension is absent is an error).
``use()`` switches at runtime, mainly for tests and benchmarks.
"""

import os

from . import pyref

try:
    from . import _fastkern
except ImportError:  # extension not built
    _fastkern = None

_BACKENDS = {"python": pyref}
if _fastkern is not None:
    _BACKENDS["compiled"] = _fastkern


def available():
    return sorted(_BACKENDS)


def _initial():
    forced = os.environ.get("CLIPFORGE_BACKEND", "auto")
    if forced == "auto":
        return _BACKENDS.get("compiled", pyref)
    if forced not in _BACKENDS:
        raise ImportError(
            f"CLIPFORGE_BACKEND={forced!r} requested but only {available()} available"
        )
    return _BACKENDS[forced]


_active = _initial()


def use(name):
    """Switch the active kernel backend ("python" or "compiled")."""
    global _active
    if name not in _BACKENDS:
        raise ValueError(f"unknown backend {name!r}; available: {available()}")
    _active = _BACKENDS[name]


def get(name=None):
    """Return a backend module by name, or the active one."""
    if name is None:
        return _active
    if name not in _BACKENDS:
        raise ValueError(f"unknown backend {name!r}; available: {available()}")
    return _BACKENDS[name]


def active_name():
    return _active.NAME
