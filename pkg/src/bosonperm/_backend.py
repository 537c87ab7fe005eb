"""Kernel backend selection.

The hot inner loops exist twice: compiled (``bosonperm._kernels``, Cython)
and pure Python (``bosonperm._kernels_py``).  The compiled module is used
when importable; set ``BOSONPERM_BACKEND=python`` or ``=compiled`` to force
a choice at import time.  Both backends are bit-for-bit equivalent.
"""

import os

_forced = os.environ.get("BOSONPERM_BACKEND", "").strip().lower()
if _forced not in ("", "compiled", "python"):
    raise ImportError(f"unsupported BOSONPERM_BACKEND value: {_forced!r}")

if _forced == "python":
    from . import _kernels_py as kernels
    BACKEND = "python"
else:
    try:
        from . import _kernels as kernels  # type: ignore[no-redef]
        BACKEND = "compiled"
    except ImportError:
        if _forced == "compiled":
            raise
        from . import _kernels_py as kernels  # type: ignore[no-redef]
        BACKEND = "python"


def backend_name() -> str:
    """Which kernel backend is active: ``"compiled"`` or ``"python"``."""
    return BACKEND
