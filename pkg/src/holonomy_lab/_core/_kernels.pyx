# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels: trigonometric series evaluation on the circle.

Everything here has a pure-python twin in ``_kernels_py`` with the same
signatures; ``holonomy_lab._core`` picks one at import time.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport cos, sin, fmod

cnp.import_array()

TWO_PI = 6.283185307179586476925286766559


def eval_trig_series(double[::1] a, double[::1] b, double[::1] pts):
    """Evaluate sum_k a[k]*cos(2*pi*k*t) + b[k]*sin(2*pi*k*t) at pts.

    Uses the angle-addition recurrence so only one cos/sin pair is
    computed per point.
    """
    cdef Py_ssize_t n_modes = a.shape[0]
    cdef Py_ssize_t n_pts = pts.shape[0]
    cdef cnp.ndarray[double, ndim=1] out = np.empty(n_pts, dtype=np.float64)
    cdef double[::1] ov = out
    cdef Py_ssize_t i, k
    cdef double c1, s1, ck, sk, acc, t, tmp
    cdef double two_pi = 6.283185307179586476925286766559

    for i in range(n_pts):
        t = fmod(pts[i], 1.0)
        c1 = cos(two_pi * t)
        s1 = sin(two_pi * t)
        acc = a[0]
        ck = 1.0
        sk = 0.0
        for k in range(1, n_modes):
            tmp = ck * c1 - sk * s1
            sk = sk * c1 + ck * s1
            ck = tmp
            acc += a[k] * ck + b[k] * sk
        ov[i] = acc
    return out


def eval_trig_series_pair(double[::1] a, double[::1] b,
                          double[::1] da, double[::1] db,
                          double[::1] pts):
    """Evaluate a trig series and a second series (its derivative
    coefficients) at pts in a single recurrence pass.

    Returns (values, derivative_values).
    """
    cdef Py_ssize_t n_modes = a.shape[0]
    cdef Py_ssize_t n_pts = pts.shape[0]
    cdef cnp.ndarray[double, ndim=1] out = np.empty(n_pts, dtype=np.float64)
    cdef cnp.ndarray[double, ndim=1] dout = np.empty(n_pts, dtype=np.float64)
    cdef double[::1] ov = out
    cdef double[::1] dv = dout
    cdef Py_ssize_t i, k
    cdef double c1, s1, ck, sk, acc, dacc, t, tmp
    cdef double two_pi = 6.283185307179586476925286766559

    for i in range(n_pts):
        t = fmod(pts[i], 1.0)
        c1 = cos(two_pi * t)
        s1 = sin(two_pi * t)
        acc = a[0]
        dacc = da[0]
        ck = 1.0
        sk = 0.0
        for k in range(1, n_modes):
            tmp = ck * c1 - sk * s1
            sk = sk * c1 + ck * s1
            ck = tmp
            acc += a[k] * ck + b[k] * sk
            dacc += da[k] * ck + db[k] * sk
        ov[i] = acc
        dv[i] = dacc
    return out, dout


IMPLEMENTATION = "cython"
