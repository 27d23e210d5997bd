"""Selects the stepping kernel at import time.

``TIPWAVE_BACKEND`` may be set to ``cython``, ``python`` or ``auto``
(default). ``auto`` prefers the compiled extension and falls back to
the NumPy kernel when the extension is not built.
"""

from __future__ import annotations

import os

from . import _kernels_py

_AVAILABLE: dict[str, object] = {"python": _kernels_py}
try:
    from . import _kernels as _kernels_cy

    _AVAILABLE["cython"] = _kernels_cy
except ImportError:
    _kernels_cy = None


def available_backends() -> tuple[str, ...]:
    return tuple(sorted(_AVAILABLE))


def get_kernel(name: str | None = None):
    """Return the ``step_field`` callable for a backend.

    ``None`` resolves via TIPWAVE_BACKEND; unknown or unavailable names
    raise ValueError so a typo never silently changes the numerics.
    """
    if name is None:
        name = os.environ.get("TIPWAVE_BACKEND", "auto")
    if name == "auto":
        name = "cython" if "cython" in _AVAILABLE else "python"
    if name not in _AVAILABLE:
        raise ValueError(f"unknown backend {name!r}; available: {available_backends()}")
    return _AVAILABLE[name].step_field


def default_backend_name() -> str:
    name = os.environ.get("TIPWAVE_BACKEND", "auto")
    if name == "auto":
        return "cython" if "cython" in _AVAILABLE else "python"
    return name
