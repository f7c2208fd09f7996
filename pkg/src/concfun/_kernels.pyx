# cython: language_level=3, boundscheck=False, wraparound=False, initializedcheck=False
"""Compiled sliding-window kernels for the concentration function.

Both kernels take sorted atoms and scan the windows [v_i, v_i + z] (or the
half-open [v_i, v_i + z)) in O(m) per grid point.
"""

import numpy as np


def window_counts_max(const double[::1] v, const double[::1] zs, bint closed):
    """Largest number of sorted sample points in a window of each length in ``zs``.

    The window anchored at v[i] holds more than ``best`` points exactly when
    v[i + best] is inside it, so one comparison per anchor suffices.  For a
    nondecreasing grid the previous answer is a valid starting value.
    """
    cdef Py_ssize_t m = v.shape[0]
    cdef Py_ssize_t nz = zs.shape[0]
    cdef Py_ssize_t i, k, best = 0
    cdef double z, prev_z = 0.0
    out = np.zeros(nz, dtype=np.int64)
    cdef long long[::1] res = out
    with nogil:
        for k in range(nz):
            z = zs[k]
            if k == 0 or z < prev_z:
                best = 0
            prev_z = z
            if closed:
                for i in range(m - best):
                    while i + best < m and v[i + best] <= v[i] + z:
                        best += 1
            else:
                for i in range(m - best):
                    while i + best < m and v[i + best] < v[i] + z:
                        best += 1
            res[k] = best
    return out


def window_mass_max(const double[::1] v, const double[::1] cum, const double[::1] zs, bint closed):
    """Largest probability mass of sorted atoms in a window of each length in ``zs``.

    ``cum`` has length m + 1 with cum[0] = 0 and cum[i + 1] the mass of atoms 0..i.
    """
    cdef Py_ssize_t m = v.shape[0]
    cdef Py_ssize_t nz = zs.shape[0]
    cdef Py_ssize_t i, j, k
    cdef double z, edge, best, mass
    out = np.zeros(nz, dtype=np.float64)
    cdef double[::1] res = out
    with nogil:
        for k in range(nz):
            z = zs[k]
            j = 0
            best = 0.0
            for i in range(m):
                if j < i:
                    j = i
                edge = v[i] + z
                if closed:
                    while j < m and v[j] <= edge:
                        j += 1
                else:
                    while j < m and v[j] < edge:
                        j += 1
                mass = cum[j] - cum[i]
                if mass > best:
                    best = mass
            res[k] = best
    return out
