# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled circuit kernels.  See ``_pykernels`` for the reference semantics."""
import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt
from libc.stdint cimport int64_t

cnp.import_array()


def accumulate_pair_phases(int n, pairs, idx, int64_t mul_phi, int64_t mul_theta,
                           int64_t modulus):
    cdef int64_t[:, ::1] pr = np.ascontiguousarray(pairs, dtype=np.int64)
    cdef int64_t[:, ::1] ix = np.ascontiguousarray(idx, dtype=np.int64)
    cdef Py_ssize_t N = (<Py_ssize_t>1) << n
    cdef Py_ssize_t P = pr.shape[0]
    out = np.empty(N, dtype=np.int64)
    cdef int64_t[::1] o = out
    cdef int64_t[::1] wa = np.empty(P, dtype=np.int64)
    cdef int64_t[::1] wb = np.empty(P, dtype=np.int64)
    cdef int64_t[::1] wc = np.empty(P, dtype=np.int64)
    cdef int[::1] si = np.empty(P, dtype=np.intc)
    cdef int[::1] sj = np.empty(P, dtype=np.intc)
    cdef Py_ssize_t x, p
    cdef int64_t acc, bi, bj
    for p in range(P):
        si[p] = n - 1 - <int>pr[p, 0]
        sj[p] = n - 1 - <int>pr[p, 1]
        wa[p] = ix[p, 0] * mul_phi
        wb[p] = ix[p, 1] * mul_phi
        wc[p] = ix[p, 2] * mul_theta
    with nogil:
        for x in range(N):
            acc = 0
            for p in range(P):
                bi = (x >> si[p]) & 1
                bj = (x >> sj[p]) & 1
                acc += bi * wa[p] + bj * wb[p] + (bi & bj) * wc[p]
            o[x] = acc % modulus
    return out


def hadamard_rows(double[:, ::1] m):
    cdef Py_ssize_t N = m.shape[0], c = m.shape[1]
    cdef Py_ssize_t h = 1, i, j, col
    cdef double s = 1.0 / sqrt(2.0)
    cdef double a, b
    with nogil:
        while h < N:
            i = 0
            while i < N:
                for j in range(i, i + h):
                    for col in range(c):
                        a = m[j, col]
                        b = m[j + h, col]
                        m[j, col] = (a + b) * s
                        m[j + h, col] = (a - b) * s
                i += 2 * h
            h *= 2
    return np.asarray(m)
