"""Select the compiled kernels when available, else the numpy fallback.

Set ``HAVOKTS_BACKEND=python`` to force the fallback.
"""
import os

if os.environ.get("HAVOKTS_BACKEND", "").lower() == "python":
    from havokts import _pykernels as kernels
    BACKEND = "python"
else:
    try:
        from havokts import _kernels as kernels
        BACKEND = "cython"
    except ImportError:
        from havokts import _pykernels as kernels
        BACKEND = "python"

__all__ = ["kernels", "BACKEND"]
