"""Kernel backend selection.

The hot numeric kernels (one-day epidemic transition, policy rollouts,
Q-learning episodes, particle-filter steps) ship in two implementations:
a numba ``@njit`` version and a pure-numpy fallback.  Both consume the
supplied ``numpy.random.Generator`` in the same canonical order, so the
simulation kernels produce bit-identical output under either backend.

Selection is via the environment variable ``EPICONTROL_BACKEND``:

* ``auto`` (default): numba if it imports, else numpy;
* ``numba``: require numba, raise if unavailable;
* ``numpy``: force the pure-numpy path.

``set_backend()`` overrides the choice at runtime (used by tests and the
benchmark CLI).
"""

from __future__ import annotations

import os

_VALID = ("auto", "numba", "numpy")
_forced: str | None = None


def _numba_available() -> bool:
    try:
        import numba  # noqa: F401
    except ImportError:
        return False
    return True


def active_backend() -> str:
    """Resolve the backend name currently in effect ('numba' or 'numpy')."""
    choice = _forced or os.environ.get("EPICONTROL_BACKEND", "auto").lower()
    if choice not in _VALID:
        raise ValueError(f"EPICONTROL_BACKEND must be one of {_VALID}, got {choice!r}")
    if choice == "auto":
        return "numba" if _numba_available() else "numpy"
    if choice == "numba" and not _numba_available():
        raise RuntimeError("EPICONTROL_BACKEND=numba but numba is not importable")
    return choice


def set_backend(name: str | None) -> None:
    """Force a backend ('numba' / 'numpy'), or None to restore env selection."""
    global _forced
    if name is not None and name not in ("numba", "numpy"):
        raise ValueError(f"backend must be 'numba' or 'numpy', got {name!r}")
    _forced = name


class use_backend:
    """Context manager pinning the kernel backend within a block."""

    def __init__(self, name: str):
        self.name = name
        self._prev: str | None = None

    def __enter__(self):
        global _forced
        self._prev = _forced
        set_backend(self.name)
        return self

    def __exit__(self, *exc):
        set_backend(self._prev)
        return False
