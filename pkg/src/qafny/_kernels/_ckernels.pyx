# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled statevector kernels; same contract as the numpy fallback."""
cimport cython


def apply_1q(double complex[::1] state, double complex m00, double complex m01,
             double complex m10, double complex m11, int q):
    cdef Py_ssize_t n = state.shape[0]
    cdef Py_ssize_t step = (<Py_ssize_t>1) << q
    cdef Py_ssize_t i, j
    cdef double complex a, b
    for i in range(0, n, 2 * step):
        for j in range(i, i + step):
            a = state[j]
            b = state[j + step]
            state[j] = m00 * a + m01 * b
            state[j + step] = m10 * a + m11 * b


def apply_phase(double complex[::1] state, int q, double complex phase):
    cdef Py_ssize_t n = state.shape[0]
    cdef Py_ssize_t step = (<Py_ssize_t>1) << q
    cdef Py_ssize_t i, j
    for i in range(step, n, 2 * step):
        for j in range(i, i + step):
            state[j] = state[j] * phase


def apply_cx(double complex[::1] state, int c, int t):
    cdef Py_ssize_t n = state.shape[0]
    cdef Py_ssize_t cm = (<Py_ssize_t>1) << c
    cdef Py_ssize_t tm = (<Py_ssize_t>1) << t
    cdef Py_ssize_t i
    cdef double complex tmp
    for i in range(n):
        if (i & cm) and not (i & tm):
            tmp = state[i]
            state[i] = state[i | tm]
            state[i | tm] = tmp


def apply_ccx(double complex[::1] state, int a, int b, int t):
    cdef Py_ssize_t n = state.shape[0]
    cdef Py_ssize_t am = (<Py_ssize_t>1) << a
    cdef Py_ssize_t bm = (<Py_ssize_t>1) << b
    cdef Py_ssize_t tm = (<Py_ssize_t>1) << t
    cdef Py_ssize_t i
    cdef double complex tmp
    for i in range(n):
        if (i & am) and (i & bm) and not (i & tm):
            tmp = state[i]
            state[i] = state[i | tm]
            state[i | tm] = tmp
