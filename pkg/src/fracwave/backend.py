"""Numba/NumPy backend selection for the hot spectral kernels.

The environment variable FRACWAVE_BACKEND picks the implementation:

  "numba"  force the @njit kernels (ImportError if numba is missing)
  "numpy"  force the pure-NumPy fallback
  unset    use numba when importable, NumPy otherwise

Both paths compute the same quantities; they agree to ~1e-12 relative but
are not bit-identical to each other (summation orders differ).  Within one
backend results are deterministic.  ``set_backend`` exists for benchmarks
and tests; switching while another thread computes is not supported.
"""

from __future__ import annotations

import os

_ENV_VAR = "FRACWAVE_BACKEND"
_VALID = ("numba", "numpy")

try:
    import numba  # noqa: F401
    _NUMBA_IMPORTABLE = True
except ImportError:
    _NUMBA_IMPORTABLE = False


def _resolve(name: str | None) -> str:
    if name is None:
        name = os.environ.get(_ENV_VAR, "").strip().lower() or None
    if name is None:
        return "numba" if _NUMBA_IMPORTABLE else "numpy"
    if name not in _VALID:
        raise ValueError(f"{_ENV_VAR} must be one of {_VALID}, got {name!r}")
    if name == "numba" and not _NUMBA_IMPORTABLE:
        raise ImportError("numba backend requested but numba is not importable")
    return name


_ACTIVE = _resolve(None)


def active_backend() -> str:
    """Name of the backend used by the spectral kernels."""
    return _ACTIVE


def numba_available() -> bool:
    return _NUMBA_IMPORTABLE


def set_backend(name: str | None) -> str:
    """Select the backend programmatically; None re-reads the environment."""
    global _ACTIVE
    _ACTIVE = _resolve(name)
    return _ACTIVE
