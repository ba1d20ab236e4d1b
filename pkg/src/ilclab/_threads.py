"""Thread cap for the BLAS backends, applied at import time.

ILC_E2E_THREADS caps internal linear-algebra parallelism for
reproducible timing. Only effective if this module runs before numpy
first loads, which is why the package __init__ imports it first.
"""
import os

_BACKEND_VARS = (
    "OMP_NUM_THREADS",
    "OPENBLAS_NUM_THREADS",
    "MKL_NUM_THREADS",
    "NUMEXPR_NUM_THREADS",
)


def apply_cap() -> None:
    cap = os.environ.get("ILC_E2E_THREADS")
    if cap:
        for var in _BACKEND_VARS:
            os.environ.setdefault(var, cap)


apply_cap()
