"""Numpy implementations of the sliding-window kernels (fallback backend)."""

from __future__ import annotations

import numpy as np


def window_counts_max(v: np.ndarray, zs: np.ndarray, closed: bool) -> np.ndarray:
    side = "right" if closed else "left"
    start = np.arange(v.shape[0])
    out = np.zeros(zs.shape[0], dtype=np.int64)
    for k, z in enumerate(zs):
        stop = np.searchsorted(v, v + z, side=side)
        out[k] = int(np.max(stop - start))
    return out


def window_mass_max(v: np.ndarray, cum: np.ndarray, zs: np.ndarray, closed: bool) -> np.ndarray:
    side = "right" if closed else "left"
    start = np.arange(v.shape[0])
    out = np.zeros(zs.shape[0])
    for k, z in enumerate(zs):
        stop = np.searchsorted(v, v + z, side=side)
        out[k] = float(np.max(cum[stop] - cum[start]))
    return out
