"""Pure-numpy register kernels (fallback when the compiled core is absent).

All functions act in place on a C-contiguous ``(m, 4, 4)`` complex128
stack of pair density matrices, touching only the rows listed in ``idx``.
Randomness is supplied as pre-drawn uniforms so both backends produce
identical outcomes for identical inputs.
"""
import numpy as np

PROB_SNAP = 1e-12

_I2 = np.eye(2, dtype=complex)
_PAULIS = np.array(
    [
        [[1, 0], [0, 1]],
        [[0, 1], [1, 0]],
        [[0, -1j], [1j, 0]],
        [[1, 0], [0, -1]],
    ],
    dtype=complex,
)


def _lift(ops, side):
    k = ops.shape[0]
    if side == 0:
        full = np.einsum("kac,bd->kabcd", ops, _I2)
    else:
        full = np.einsum("ac,kbd->kabcd", _I2, ops)
    return full.reshape(k, 4, 4)


def _sandwich(rho, idx, side, ops):
    full = _lift(ops, side)
    rho[idx] = full @ rho[idx] @ np.conj(np.swapaxes(full, 1, 2))


def apply_pauli(rho, idx, side, ops):
    idx = np.asarray(idx, dtype=np.int64)
    if idx.size == 0:
        return
    _sandwich(rho, idx, side, _PAULIS[np.asarray(ops, dtype=np.int64)])


def up_projectors(axes):
    axes = np.asarray(axes, dtype=float)
    nx, ny, nz = axes[:, 0], axes[:, 1], axes[:, 2]
    proj = np.empty((axes.shape[0], 2, 2), dtype=complex)
    proj[:, 0, 0] = 1 + nz
    proj[:, 0, 1] = nx - 1j * ny
    proj[:, 1, 0] = nx + 1j * ny
    proj[:, 1, 1] = 1 - nz
    return 0.5 * proj


def measure(rho, idx, side, axes, uniforms):
    idx = np.asarray(idx, dtype=np.int64)
    out = np.empty(idx.size, dtype=np.int8)
    if idx.size == 0:
        return out
    p_plus = up_projectors(axes)
    full = _lift(p_plus, side)
    sel = rho[idx]
    p_up = np.einsum("kij,kji->k", full, sel).real
    p_up = np.where(p_up < PROB_SNAP, 0.0, np.where(p_up > 1 - PROB_SNAP, 1.0, p_up))
    up = np.asarray(uniforms) < p_up
    out[:] = np.where(up, 1, -1)
    proj = np.where(up[:, None, None], p_plus, _I2 - p_plus)
    prob = np.where(up, p_up, 1.0 - p_up)
    full = _lift(proj, side)
    post = full @ sel @ full / prob[:, None, None]
    rho[idx] = 0.5 * (post + np.conj(np.swapaxes(post, 1, 2)))
    return out


def depolarize(rho, idx, side, p):
    idx = np.asarray(idx, dtype=np.int64)
    if idx.size == 0 or p == 0.0:
        return
    t = rho[idx].reshape(-1, 2, 2, 2, 2)
    if side == 0:
        red = np.einsum("kabad->kbd", t)
        mixed = 0.5 * np.einsum("ac,kbd->kabcd", _I2, red)
    else:
        red = np.einsum("kabcb->kac", t)
        mixed = 0.5 * np.einsum("kac,bd->kabcd", red, _I2)
    rho[idx] = ((1.0 - p) * t + p * mixed).reshape(-1, 4, 4)
