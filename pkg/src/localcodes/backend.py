"""Training-kernel backend selection.

The compiled Cython extension is preferred when importable; otherwise the
pure-NumPy implementation is used.  Override with LOCALCODES_BACKEND=python
or LOCALCODES_BACKEND=compiled (the latter raises if the extension is
missing, instead of silently falling back).
"""

from __future__ import annotations

import os

from . import _kernels_py

_FORCED = os.environ.get("LOCALCODES_BACKEND", "").strip().lower()

if _FORCED == "python":
    _impl = _kernels_py
elif _FORCED == "compiled":
    from . import _kernels as _impl  # noqa: F401  (ImportError is the point)
else:
    try:
        from . import _kernels as _impl
    except ImportError:
        _impl = _kernels_py

ACTIVE_BACKEND: str = _impl.NAME
fused_train_step = _impl.fused_train_step


def available_backends() -> list[str]:
    names = ["python"]
    try:
        from . import _kernels  # noqa: F401
        names.insert(0, "compiled")
    except ImportError:
        pass
    return names


def get_backend(name: str):
    """Return a kernel module by name ('python' or 'compiled')."""
    if name == "python":
        return _kernels_py
    if name == "compiled":
        from . import _kernels
        return _kernels
    raise ValueError(f"unknown backend {name!r}")
