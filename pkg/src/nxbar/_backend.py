"""Selects the kernel backend at import.

The compiled extension is preferred; the pure-NumPy module is the fallback.
Set NXBAR_BACKEND=python to force the fallback (used by the benchmark and the
cross-backend tests).
"""

import os

from . import _kernels_py

if os.environ.get("NXBAR_BACKEND", "").lower() in ("python", "py"):
    kernels = _kernels_py
else:
    try:
        from . import _kernels as kernels
    except ImportError:
        kernels = _kernels_py

HAVE_COMPILED = bool(getattr(kernels, "IS_COMPILED", False))


def backend_name():
    return "compiled" if HAVE_COMPILED else "python"
