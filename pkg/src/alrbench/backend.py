"""Kernel backend selection.

The compiled Cython extension is used when it imports cleanly; otherwise the
pure-NumPy fallback takes over.  Set ``ALRBENCH_PURE=1`` to force the
fallback (useful for benchmarking and backend-equivalence tests).
"""

import os

if os.environ.get("ALRBENCH_PURE"):
    from . import _kernels_py as kernels

    BACKEND = "python"
else:
    try:
        from . import _kernels as kernels  # type: ignore[no-redef]

        BACKEND = "cython"
    except ImportError:
        from . import _kernels_py as kernels  # type: ignore[no-redef]

        BACKEND = "python"

__all__ = ["kernels", "BACKEND"]
