"""Quadrature backend selection.

Two interchangeable implementations of the hot kernel ``xmax_quad`` exist:

* ``_core``  — Cython-compiled C loops (built by setup.py when possible),
* ``_ref``   — pure NumPy reference, always available.

The compiled core is preferred when importable.  Set the environment
variable ``MAXSTOP_BACKEND`` to ``compiled`` or ``reference`` to force a
choice (``compiled`` then raises if the extension is missing); anything
else is rejected so typos cannot silently change numerics.
"""
from __future__ import annotations

import os

from . import _ref

_choice = os.environ.get("MAXSTOP_BACKEND", "auto").lower()

if _choice in ("auto", "compiled"):
    try:
        from . import _core as _impl

        BACKEND = "compiled"
    except ImportError:
        if _choice == "compiled":
            raise
        _impl = _ref
        BACKEND = "reference"
elif _choice in ("reference", "ref", "python"):
    _impl = _ref
    BACKEND = "reference"
else:
    raise ImportError(
        f"MAXSTOP_BACKEND={_choice!r} not recognized; use 'auto', 'compiled', or 'reference'"
    )

xmax_quad = _impl.xmax_quad


def available_backends() -> tuple[str, ...]:
    """Names of the backends importable in this build, fastest first."""
    try:
        from . import _core  # noqa: F401
    except ImportError:
        return ("reference",)
    return ("compiled", "reference")


def get_backend(name: str):
    """Backend module by name, regardless of which one import selected."""
    if name == "reference":
        return _ref
    if name == "compiled":
        from . import _core

        return _core
    raise ValueError(f"unknown backend {name!r}; use 'compiled' or 'reference'")


__all__ = ["xmax_quad", "BACKEND", "available_backends", "get_backend"]
