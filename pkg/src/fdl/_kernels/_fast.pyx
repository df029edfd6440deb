# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled versions of the hot kernels.

Semantics are defined by pyref.py. hermitian_scatter is bitwise identical to
the reference; kde_gauss and logistic_gd_batch accumulate in a different
order, so agreement is to float tolerance.
"""

from libc.math cimport exp, sqrt

import numpy as np

cimport numpy as cnp

cnp.import_array()

BACKEND = "compiled"


def hermitian_scatter(pair_vals, self_vals, pair_a, pair_b, self_idx, size):
    pair_vals = np.ascontiguousarray(pair_vals, dtype=np.complex128)
    self_vals = np.ascontiguousarray(self_vals, dtype=np.float64)
    cdef double complex[:, ::1] pv = pair_vals
    cdef double[:, ::1] sv = self_vals
    cdef cnp.int64_t[::1] pa = np.ascontiguousarray(pair_a, dtype=np.int64)
    cdef cnp.int64_t[::1] pb = np.ascontiguousarray(pair_b, dtype=np.int64)
    cdef cnp.int64_t[::1] si = np.ascontiguousarray(self_idx, dtype=np.int64)
    cdef Py_ssize_t n = pv.shape[0]
    cdef Py_ssize_t np_ = pa.shape[0]
    cdef Py_ssize_t ns = si.shape[0]
    out = np.zeros((n, size), dtype=np.complex128)
    cdef double complex[:, ::1] o = out
    cdef double complex z
    cdef Py_ssize_t i, p, s
    for i in range(n):
        for p in range(np_):
            z = pv[i, p]
            o[i, pa[p]] = z
            o[i, pb[p]] = z.conjugate()
        for s in range(ns):
            o[i, si[s]] = sv[i, s]
    return out


def kde_gauss(samples, grid, double bandwidth):
    samples = np.ascontiguousarray(samples, dtype=np.float64)
    grid = np.ascontiguousarray(grid, dtype=np.float64)
    cdef double[::1] s = samples
    cdef double[::1] g = grid
    cdef Py_ssize_t n = s.shape[0]
    cdef Py_ssize_t m = g.shape[0]
    out = np.zeros(m, dtype=np.float64)
    cdef double[::1] o = out
    cdef double inv = 1.0 / bandwidth
    cdef double norm = 1.0 / (bandwidth * sqrt(2.0 * np.pi) * n)
    cdef double acc, z
    cdef Py_ssize_t i, j
    for j in range(m):
        acc = 0.0
        for i in range(n):
            z = (g[j] - s[i]) * inv
            acc += exp(-0.5 * z * z)
        o[j] = acc * norm
    return out


def logistic_gd_batch(x, labels, int iters, double lr, double l2):
    x = np.ascontiguousarray(x, dtype=np.float64)
    labels = np.ascontiguousarray(labels, dtype=np.float64)
    cdef double[:, ::1] xv = x
    cdef double[:, ::1] yv = labels
    cdef Py_ssize_t n = xv.shape[0]
    cdef Py_ssize_t k = xv.shape[1]
    cdef Py_ssize_t m = yv.shape[0]
    w_arr = np.zeros((m, k + 1), dtype=np.float64)
    gw_arr = np.zeros(k, dtype=np.float64)
    cdef double[:, ::1] w = w_arr
    cdef double[::1] gw = gw_arr
    cdef double z, p, gi, gb
    cdef Py_ssize_t it, j, i, q
    for it in range(iters):
        for j in range(m):
            gb = 0.0
            for q in range(k):
                gw[q] = 0.0
            for i in range(n):
                z = w[j, 0]
                for q in range(k):
                    z += xv[i, q] * w[j, q + 1]
                p = 1.0 / (1.0 + exp(-z))
                gi = (p - yv[j, i]) / n
                gb += gi
                for q in range(k):
                    gw[q] += gi * xv[i, q]
            for q in range(k):
                w[j, q + 1] -= lr * (gw[q] + l2 * w[j, q + 1])
            w[j, 0] -= lr * gb
    return w_arr
