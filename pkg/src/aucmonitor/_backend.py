"""Kernel backend selection.

The compiled kernels are used when importable; setting the environment
variable ``AUCMONITOR_PURE_PYTHON=1`` forces the numpy fallback.
"""

import os

if os.environ.get("AUCMONITOR_PURE_PYTHON", "") not in ("", "0"):
    from . import _pykernels as kernels

    BACKEND = "python"
else:
    try:
        from . import _ckernels as kernels

        BACKEND = "cython"
    except ImportError:
        from . import _pykernels as kernels

        BACKEND = "python"

__all__ = ["BACKEND", "kernels"]
