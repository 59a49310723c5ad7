# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled per-anchor ratio-loss kernel.

Contract mirrors gclkit._core_py.ratio_terms; see that module for docs.
"""

import numpy as np

from libc.math cimport exp, log

IS_COMPILED = True


def ratio_terms(double[:, ::1] e, double[:, ::1] a, const unsigned char[::1] active,
                double eps, bint log_transform, double inv_norm):
    cdef Py_ssize_t m = e.shape[0]
    r_arr = np.zeros(m)
    de_arr = np.zeros((m, m))
    cdef double[::1] r = r_arr
    cdef double[:, ::1] de = de_arr

    cdef Py_ssize_t i, j
    cdef double mx, num, den, w, ri, acc, dl_dr
    cdef double loss = 0.0

    for i in range(m):
        if not active[i]:
            continue
        mx = -1e300
        for j in range(m):
            if a[i, j] != 0.0 and e[i, j] > mx:
                mx = e[i, j]
        num = 0.0
        den = eps * exp(-mx)
        for j in range(m):
            if a[i, j] == 0.0:
                continue
            w = exp(e[i, j] - mx)
            den += w
            if a[i, j] > 0.0:
                num += w
        ri = num / den
        r[i] = ri
        if log_transform:
            acc = log(ri)
            dl_dr = -inv_norm / ri
        else:
            acc = ri
            dl_dr = -inv_norm
        loss += acc
        for j in range(m):
            if a[i, j] == 0.0:
                continue
            w = exp(e[i, j] - mx)
            if a[i, j] > 0.0:
                de[i, j] = dl_dr * (w * den - num * w) / (den * den)
            else:
                de[i, j] = dl_dr * (-num * w) / (den * den)

    return -inv_norm * loss, r_arr, de_arr
