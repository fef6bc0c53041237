"""Backend selection for the hot kernels.

SIRSVAX_BACKEND=numpy forces the pure-numpy fallback, SIRSVAX_BACKEND=numba
requires numba (ImportError if missing); unset or 'auto' picks numba when it
is importable.
"""

import os


def _resolve() -> bool:
    req = os.environ.get("SIRSVAX_BACKEND", "auto").strip().lower() or "auto"
    if req not in ("auto", "numba", "numpy"):
        raise RuntimeError(
            f"SIRSVAX_BACKEND must be 'numba', 'numpy' or 'auto', got {req!r}")
    if req == "numpy":
        return False
    try:
        import numba  # noqa: F401
    except ImportError:
        if req == "numba":
            raise
        return False
    return True


USE_NUMBA = _resolve()
BACKEND = "numba" if USE_NUMBA else "numpy"
