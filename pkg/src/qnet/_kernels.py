"""Compiled inner loops for the fixed-step propagator."""

import numba as nb
import numpy as np


@nb.njit(cache=True, nogil=True)
def _rhs(indptr, indices, data, weights, amps, omega_d, phases, v, t, out):
    n = v.shape[0]
    n_sites = weights.shape[0]
    g = np.empty(n_sites)
    for j in range(n_sites):
        g[j] = amps[j] * np.cos(omega_d * t + phases[j])
    for row in range(n):
        acc = 0j
        for p in range(indptr[row], indptr[row + 1]):
            acc += data[p] * v[indices[p]]
        w = 0.0
        for j in range(n_sites):
            w += g[j] * weights[j, row]
        out[row] = acc - 1j * w * v[row]


@nb.njit(cache=True, nogil=True)
def rk4_propagate(indptr, indices, data, weights, amps, omega_d, phases, perm, v0, dt, n_rec, substeps):
    """Classic RK4 with Hermitian symmetrisation after every step.

    Returns the state at the ``n_rec + 1`` record times ``i * substeps * dt``.
    """
    n = v0.shape[0]
    snaps = np.empty((n_rec + 1, n), dtype=np.complex128)
    v = v0.copy()
    snaps[0] = v
    k1 = np.empty(n, dtype=np.complex128)
    k2 = np.empty(n, dtype=np.complex128)
    k3 = np.empty(n, dtype=np.complex128)
    k4 = np.empty(n, dtype=np.complex128)
    tmp = np.empty(n, dtype=np.complex128)
    half = 0.5 * dt
    for r in range(n_rec):
        for s in range(substeps):
            t = (r * substeps + s) * dt
            _rhs(indptr, indices, data, weights, amps, omega_d, phases, v, t, k1)
            for i in range(n):
                tmp[i] = v[i] + half * k1[i]
            _rhs(indptr, indices, data, weights, amps, omega_d, phases, tmp, t + half, k2)
            for i in range(n):
                tmp[i] = v[i] + half * k2[i]
            _rhs(indptr, indices, data, weights, amps, omega_d, phases, tmp, t + half, k3)
            for i in range(n):
                tmp[i] = v[i] + dt * k3[i]
            _rhs(indptr, indices, data, weights, amps, omega_d, phases, tmp, t + dt, k4)
            for i in range(n):
                tmp[i] = v[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])
            for i in range(n):
                v[i] = 0.5 * (tmp[i] + np.conj(tmp[perm[i]]))
        snaps[r + 1] = v
    return snaps
