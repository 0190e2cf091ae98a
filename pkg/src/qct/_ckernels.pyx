# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled register kernels. Same contract as ``qct._pykernels``."""
import numpy as np

from libc.math cimport sqrt

cdef double PROB_SNAP = 1e-12


cdef inline void _lift(double complex[:, ::1] op, int side, double complex[:, ::1] full) nogil:
    cdef int i, j, ai, bi, aj, bj
    for i in range(4):
        ai = i >> 1
        bi = i & 1
        for j in range(4):
            aj = j >> 1
            bj = j & 1
            if side == 0:
                full[i, j] = op[ai, aj] if bi == bj else 0
            else:
                full[i, j] = op[bi, bj] if ai == aj else 0


_PAULIS = np.array(
    [
        [[1, 0], [0, 1]],
        [[0, 1], [1, 0]],
        [[0, -1j], [1j, 0]],
        [[1, 0], [0, -1]],
    ],
    dtype=complex,
)


def apply_pauli(double complex[:, :, ::1] rho, idx, int side, ops):
    # A lifted Pauli has one nonzero per row: F[i, perm[i]] = phase[i], so
    # F rho F^dagger only permutes entries and multiplies them by phases.
    cdef long long[::1] ix = np.ascontiguousarray(idx, dtype=np.int64)
    cdef long long[::1] op = np.ascontiguousarray(ops, dtype=np.int64)
    cdef double complex[:, :, ::1] fulls = np.zeros((4, 4, 4), dtype=complex)
    cdef long long[:, ::1] perm = np.zeros((4, 4), dtype=np.int64)
    cdef double complex[:, ::1] phase = np.zeros((4, 4), dtype=complex)
    cdef double complex old[4][4]
    cdef double complex[:, :, ::1] paulis = _PAULIS
    cdef Py_ssize_t n = ix.shape[0], t, k
    cdef int c, i, j, l
    for c in range(4):
        _lift(paulis[c], side, fulls[c])
        for i in range(4):
            for l in range(4):
                if fulls[c, i, l] != 0:
                    perm[c, i] = l
                    phase[c, i] = fulls[c, i, l]
    with nogil:
        for t in range(n):
            c = <int>op[t]
            if c == 0:
                continue
            k = ix[t]
            for i in range(4):
                for j in range(4):
                    old[i][j] = rho[k, i, j]
            for i in range(4):
                for j in range(4):
                    rho[k, i, j] = phase[c, i] * old[perm[c, i]][perm[c, j]] * phase[c, j].conjugate()


cdef inline void _eigvec(double nx, double ny, double nz, double sgn, double complex v[2]) nogil:
    # unit vector spanning (I + sgn n.sigma)/2, taken from its larger column
    cdef double norm
    if sgn * nz >= 0:
        v[0] = 1 + sgn * nz
        v[1] = sgn * (nx + 1j * ny)
        norm = sqrt(2 * (1 + sgn * nz))
    else:
        v[0] = sgn * (nx - 1j * ny)
        v[1] = 1 - sgn * nz
        norm = sqrt(2 * (1 - sgn * nz))
    v[0] = v[0] / norm
    v[1] = v[1] / norm


cdef inline void _conditional(double complex[:, :, ::1] rho, Py_ssize_t k, int side,
                              double complex v[2], double complex sig[2][2]) nogil:
    # unnormalized state of the other particle after projecting onto v
    cdef int a, b, c, d
    for b in range(2):
        for d in range(2):
            sig[b][d] = 0
    if side == 0:
        for a in range(2):
            for c in range(2):
                for b in range(2):
                    for d in range(2):
                        sig[b][d] = sig[b][d] + v[a].conjugate() * rho[k, 2 * a + b, 2 * c + d] * v[c]
    else:
        for b in range(2):
            for d in range(2):
                for a in range(2):
                    for c in range(2):
                        sig[a][c] = sig[a][c] + v[b].conjugate() * rho[k, 2 * a + b, 2 * c + d] * v[d]


def measure(double complex[:, :, ::1] rho, idx, int side, axes, uniforms):
    # The outcome projector is rank one, P = v v^dagger, so the post-measurement
    # state is v v^dagger (x) sigma / prob with sigma the conditional 2x2 state.
    cdef long long[::1] ix = np.ascontiguousarray(idx, dtype=np.int64)
    cdef double[:, ::1] ax = np.ascontiguousarray(axes, dtype=np.float64).reshape(-1, 3)
    cdef double[::1] u = np.ascontiguousarray(uniforms, dtype=np.float64)
    cdef Py_ssize_t n = ix.shape[0], t, k
    out_arr = np.empty(n, dtype=np.int8)
    cdef signed char[::1] out = out_arr
    cdef double complex v[2]
    cdef double complex sig[2][2]
    cdef double complex h
    cdef double nx, ny, nz, p_up, prob
    cdef int a, b, c, d
    with nogil:
        for t in range(n):
            k = ix[t]
            nx = ax[t, 0]
            ny = ax[t, 1]
            nz = ax[t, 2]
            _eigvec(nx, ny, nz, 1.0, v)
            _conditional(rho, k, side, v, sig)
            p_up = sig[0][0].real + sig[1][1].real
            if p_up < PROB_SNAP:
                p_up = 0.0
            elif p_up > 1 - PROB_SNAP:
                p_up = 1.0
            if u[t] < p_up:
                out[t] = 1
                prob = p_up
            else:
                out[t] = -1
                prob = 1.0 - p_up
                _eigvec(nx, ny, nz, -1.0, v)
                _conditional(rho, k, side, v, sig)
            h = 0.5 * (sig[0][1] + sig[1][0].conjugate())
            sig[0][1] = h
            sig[1][0] = h.conjugate()
            sig[0][0] = sig[0][0].real
            sig[1][1] = sig[1][1].real
            for a in range(2):
                for b in range(2):
                    for c in range(2):
                        for d in range(2):
                            if side == 0:
                                rho[k, 2 * a + b, 2 * c + d] = v[a] * v[c].conjugate() * sig[b][d] / prob
                            else:
                                rho[k, 2 * a + b, 2 * c + d] = sig[a][c] * v[b] * v[d].conjugate() / prob
    return out_arr


def depolarize(double complex[:, :, ::1] rho, idx, int side, double p):
    cdef long long[::1] ix = np.ascontiguousarray(idx, dtype=np.int64)
    cdef Py_ssize_t n = ix.shape[0], t, k
    cdef double complex red[2][2]
    cdef int a, b, c, d, x
    cdef double q = 1.0 - p
    if n == 0 or p == 0.0:
        return
    with nogil:
        for t in range(n):
            k = ix[t]
            if side == 0:
                # reduced state of Bob's particle
                for b in range(2):
                    for d in range(2):
                        red[b][d] = rho[k, b, d] + rho[k, 2 + b, 2 + d]
                for a in range(2):
                    for b in range(2):
                        for c in range(2):
                            for d in range(2):
                                rho[k, 2 * a + b, 2 * c + d] = q * rho[k, 2 * a + b, 2 * c + d] + (
                                    0.5 * p * red[b][d] if a == c else 0)
            else:
                for a in range(2):
                    for c in range(2):
                        red[a][c] = rho[k, 2 * a, 2 * c] + rho[k, 2 * a + 1, 2 * c + 1]
                for a in range(2):
                    for b in range(2):
                        for c in range(2):
                            for d in range(2):
                                rho[k, 2 * a + b, 2 * c + d] = q * rho[k, 2 * a + b, 2 * c + d] + (
                                    0.5 * p * red[a][c] if b == d else 0)
