# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels for dense graded series arithmetic.

Coefficient vectors are indexed by a :class:`~hyperlagrange.hyperreal.Basis`.
Accumulation order (outer index ``i``, inner index ``j``) matches the numpy
fallback in ``_series_py`` so both backends agree bit for bit.
"""

import numpy as np
cimport numpy as cnp

cnp.import_array()

NAME = "cython"


cdef void _mul_into(const double[::1] a, const double[::1] b,
                    const int[:, ::1] table, const int[::1] limit,
                    double[::1] out) noexcept nogil:
    cdef Py_ssize_t n = a.shape[0]
    cdef Py_ssize_t i, j
    cdef double ai, bj
    for i in range(n):
        ai = a[i]
        if ai == 0.0:
            continue
        for j in range(limit[i]):
            bj = b[j]
            if bj == 0.0:
                continue
            out[table[i, j]] += ai * bj


def mul(const double[::1] a, const double[::1] b, basis):
    cdef const int[:, ::1] table = basis.table
    cdef const int[::1] limit = basis.limit
    out = np.zeros(a.shape[0], dtype=np.float64)
    cdef double[::1] view = out
    _mul_into(a, b, table, limit, view)
    return out


def reciprocal_unit(const double[::1] a, basis):
    """Inverse of a series with nonzero constant term, by Horner on 1/(1+u)."""
    cdef const int[:, ::1] table = basis.table
    cdef const int[::1] limit = basis.limit
    cdef Py_ssize_t n = a.shape[0]
    cdef int order = basis.order
    cdef double c = a[0]
    cdef Py_ssize_t i
    cdef int step

    u_arr = np.empty(n, dtype=np.float64)
    r_arr = np.zeros(n, dtype=np.float64)
    t_arr = np.empty(n, dtype=np.float64)
    cdef double[::1] u = u_arr
    cdef double[::1] r = r_arr
    cdef double[::1] t = t_arr

    for i in range(n):
        u[i] = a[i] / c
    u[0] = 0.0
    r[0] = 1.0
    for step in range(order):
        for i in range(n):
            t[i] = 0.0
        _mul_into(u, r, table, limit, t)
        for i in range(n):
            r[i] = -t[i]
        r[0] = r[0] + 1.0
    for i in range(n):
        r[i] = r[i] / c
    return r_arr
