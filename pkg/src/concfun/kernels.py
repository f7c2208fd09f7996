"""Backend selection for the hot sliding-window kernels.

The compiled extension is used when it was built; set ``CONCFUN_PURE_PYTHON=1``
to force the numpy fallback.  ``BACKEND`` names the active one.
"""

from __future__ import annotations

import os

import numpy as np

from . import _pykernels

try:
    if os.environ.get("CONCFUN_PURE_PYTHON"):
        raise ImportError("compiled kernels disabled by CONCFUN_PURE_PYTHON")
    from . import _kernels as _impl

    BACKEND = "cython"
except ImportError:
    _impl = _pykernels
    BACKEND = "python"


def window_counts_max(values: np.ndarray, zs: np.ndarray, closed: bool = True) -> np.ndarray:
    """Max count of sorted ``values`` inside a window of each length in ``zs``."""
    v = np.ascontiguousarray(values, dtype=np.float64)
    z = np.ascontiguousarray(zs, dtype=np.float64)
    return np.asarray(_impl.window_counts_max(v, z, bool(closed)))


def window_mass_max(values: np.ndarray, probs: np.ndarray, zs: np.ndarray, closed: bool = True) -> np.ndarray:
    """Max probability of sorted atoms ``values`` inside a window of each length in ``zs``."""
    v = np.ascontiguousarray(values, dtype=np.float64)
    cum = np.concatenate(([0.0], np.cumsum(probs, dtype=np.float64)))
    z = np.ascontiguousarray(zs, dtype=np.float64)
    return np.asarray(_impl.window_mass_max(v, cum, z, bool(closed)))
