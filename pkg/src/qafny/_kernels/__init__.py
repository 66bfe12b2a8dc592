"""Hot statevector kernels.

The compiled extension is used when it was built; otherwise the numpy
fallback is chosen at import.  Setting ``QAFNY_PURE_PYTHON=1`` forces the
fallback.
"""
import os

from . import _pykernels as py

if os.environ.get("QAFNY_PURE_PYTHON"):
    backend = py
    BACKEND = "python"
else:
    try:
        from . import _ckernels as backend
        BACKEND = "cython"
    except ImportError:
        backend = py
        BACKEND = "python"

apply_1q = backend.apply_1q
apply_phase = backend.apply_phase
apply_cx = backend.apply_cx
apply_ccx = backend.apply_ccx

__all__ = ["apply_1q", "apply_phase", "apply_cx", "apply_ccx", "BACKEND", "py"]
