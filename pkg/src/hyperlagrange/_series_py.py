"""Numpy fallback for the compiled series kernels in ``_series.pyx``.

Products are accumulated with ``np.bincount`` over the basis pair list, which is
stored in (i, j) lexicographic order; this reproduces the compiled loop's
summation order exactly.
"""

import numpy as np

NAME = "python"


def mul(a, b, basis):
    weights = a[basis.pair_i] * b[basis.pair_j]
    return np.bincount(basis.pair_k, weights=weights, minlength=a.shape[0])


def reciprocal_unit(a, basis):
    c = a[0]
    u = a / c
    u[0] = 0.0
    r = np.zeros_like(u)
    r[0] = 1.0
    for _ in range(basis.order):
        r = -mul(u, r, basis)
        r[0] += 1.0
    return r / c
