"""Numpy statevector kernels, used when the compiled extension is absent.

All kernels update a complex128 vector in place.  Qubit q is bit q of
the amplitude index (little-endian).
"""
import numpy as np


def _split(state, q):
    # view with axes (high bits, bit q, low bits)
    return state.reshape(-1, 2, 1 << q)


def apply_1q(state, m00, m01, m10, m11, q):
    v = _split(state, q)
    a = v[:, 0, :].copy()
    b = v[:, 1, :]
    v[:, 0, :] = m00 * a + m01 * b
    v[:, 1, :] = m10 * a + m11 * b


def apply_phase(state, q, phase):
    _split(state, q)[:, 1, :] *= phase


def _mask_indices(n, ones):
    idx = np.arange(n)
    keep = np.ones(n, dtype=bool)
    for q in ones:
        keep &= (idx >> q) & 1 == 1
    return idx[keep]


def apply_cx(state, c, t):
    idx = _mask_indices(state.shape[0], [c])
    idx = idx[(idx >> t) & 1 == 0]
    other = idx | (1 << t)
    state[idx], state[other] = state[other].copy(), state[idx].copy()


def apply_ccx(state, a, b, t):
    idx = _mask_indices(state.shape[0], [a, b])
    idx = idx[(idx >> t) & 1 == 0]
    other = idx | (1 << t)
    state[idx], state[other] = state[other].copy(), state[idx].copy()
