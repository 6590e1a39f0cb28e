"""Kernel backend selection.

The hot simplex pivot loop exists twice: a Cython extension (`_pivot_cy`)
and a pure-Python fallback (`pivot_py`).  The compiled version is used when
present; set EVIKIT_KERNEL=python to force the fallback or EVIKIT_KERNEL=c
to fail loudly when the extension is missing.
"""

import os

_choice = os.environ.get("EVIKIT_KERNEL", "auto").lower()

if _choice not in ("auto", "c", "python"):
    raise ValueError(f"EVIKIT_KERNEL must be auto|c|python, got {_choice!r}")

if _choice in ("auto", "c"):
    try:
        from evikit._kernels._pivot_cy import lp_pivot_loop
        BACKEND = "c"
    except ImportError:
        if _choice == "c":
            raise
        from evikit._kernels.pivot_py import lp_pivot_loop
        BACKEND = "python"
else:
    from evikit._kernels.pivot_py import lp_pivot_loop
    BACKEND = "python"

OPTIMAL = 0
UNBOUNDED = 1
BUDGET = 2

__all__ = ["lp_pivot_loop", "BACKEND", "OPTIMAL", "UNBOUNDED", "BUDGET"]
