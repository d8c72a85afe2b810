"""Numerical kernels with a compiled fast path and a pure-numpy fallback.

The backend is picked once at import time: the Cython extension when it is
built, numpy otherwise. Set PRELOG_LAB_BACKEND=numpy or =compiled to force
a choice (forcing an unavailable compiled backend raises ImportError).
"""

from __future__ import annotations

import os

import numpy as np

from . import _np_impl

_requested = os.environ.get("PRELOG_LAB_BACKEND", "auto").lower()
if _requested not in ("auto", "compiled", "numpy"):
    raise ValueError(f"PRELOG_LAB_BACKEND must be auto|compiled|numpy, got {_requested!r}")

_impl = None
if _requested in ("auto", "compiled"):
    try:
        from . import _core as _impl  # type: ignore[attr-defined]
    except ImportError:
        if _requested == "compiled":
            raise
        _impl = None

if _impl is None:
    _impl = _np_impl
    BACKEND = "numpy"
else:
    BACKEND = "compiled"


def _as_f64(a):
    return np.ascontiguousarray(a, dtype=np.float64)


def _as_c128(a):
    return np.ascontiguousarray(a, dtype=np.complex128)


def logdet_i_rho_gram(u, cstack, rho: float) -> np.ndarray:
    """Batched log det(I + rho * sum_k u[n,k] C[k]); returns shape (n,)."""
    return _impl.logdet_i_rho_gram(_as_f64(u), _as_c128(cstack), float(rho))


def mixture_loglik(u, z, cstack, rho: float, y_sq: float, n_ambient: int) -> np.ndarray:
    """Batched Gaussian log-density of one observation under many inputs."""
    return _impl.mixture_loglik(_as_f64(u), _as_c128(z), _as_c128(cstack),
                                float(rho), float(y_sq), float(n_ambient))


def implementations() -> dict:
    """Available implementations keyed by name (for tests and benchmarks)."""
    out = {"numpy": _np_impl}
    try:
        from . import _core
        out["compiled"] = _core
    except ImportError:
        pass
    return out
