# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled hot loops: winding/gap sweep over parameter cells and arc angle sums."""
import numpy as np
cimport numpy as cnp
from cython.parallel cimport prange
from libc.math cimport cos, sin, atan2, sqrt, fabs, M_PI

cnp.import_array()

cdef double TWO_PI = 2.0 * M_PI


def winding_and_gap(theta1, theta2, int n_k):
    """Raw winding number and minimum gap for each (theta1[i], theta2[i]).

    Angle increments between consecutive samples are atan2(cross, dot) of
    the (d2, d3) vectors; the minimum gap is atan2(r, |d0|) at the smallest
    r = |(d2, d3)|.
    """
    cdef double[::1] t1 = np.ascontiguousarray(theta1, dtype=np.float64)
    cdef double[::1] t2 = np.ascontiguousarray(theta2, dtype=np.float64)
    cdef Py_ssize_t n = t1.shape[0]
    cdef Py_ssize_t i
    k = -np.pi + 2.0 * np.pi * np.arange(n_k) / n_k
    cdef double[::1] ck = np.cos(k)
    cdef double[::1] c3k = np.cos(3.0 * k)
    cdef double[::1] sk = np.sin(k)
    cdef double[::1] s3k = np.sin(3.0 * k)
    out_w = np.empty(n)
    out_g = np.empty(n)
    cdef double[::1] w_raw = out_w
    cdef double[::1] min_gap = out_g
    for i in prange(n, nogil=True, schedule="static"):
        _cell(t1[i], t2[i], ck, c3k, sk, s3k, n_k, &w_raw[i], &min_gap[i])
    return out_w, out_g


cdef void _cell(double th1, double th2, double[::1] ck, double[::1] c3k,
                double[::1] sk, double[::1] s3k, int n_k,
                double* w_out, double* g_out) noexcept nogil:
    cdef double c1 = cos(th1), s1 = sin(th1)
    cdef double c2sq = cos(th2) * cos(th2), s2sq = sin(th2) * sin(th2)
    cdef double s22 = sin(2.0 * th2)
    cdef double a0 = -(c1 * s2sq + s1 * s22), b0 = c1 * c2sq
    cdef double a2 = s1 * s2sq - c1 * s22, b2 = -s1 * c2sq
    cdef double a3 = -s2sq, b3 = c2sq
    cdef double d2, d3, p2, p3, r2, r2min = 4.0, d0min = 0.0, acc = 0.0
    cdef double f2 = a2 * ck[0] + b2 * c3k[0]
    cdef double f3 = a3 * sk[0] + b3 * s3k[0]
    cdef Py_ssize_t j, jmin = 0
    p2 = f2
    p3 = f3
    for j in range(n_k):
        if j == 0:
            d2 = f2
            d3 = f3
        else:
            d2 = a2 * ck[j] + b2 * c3k[j]
            d3 = a3 * sk[j] + b3 * s3k[j]
            acc += atan2(p2 * d3 - p3 * d2, p2 * d2 + p3 * d3)
        r2 = d2 * d2 + d3 * d3
        if r2 < r2min:
            r2min = r2
            jmin = j
        p2 = d2
        p3 = d3
    acc += atan2(p2 * f3 - p3 * f2, p2 * f2 + p3 * f3)
    d0min = fabs(a0 * ck[jmin] + b0 * c3k[jmin])
    w_out[0] = acc / TWO_PI
    g_out[0] = atan2(sqrt(r2min), d0min)


def arc_angle_sum(double theta1, double theta2, k_lo, k_hi, int n_per_arc):
    """Accumulated angle of (d2, d3) along open arcs ``[k_lo[j], k_hi[j]]``."""
    cdef double[::1] lo = np.ascontiguousarray(k_lo, dtype=np.float64)
    cdef double[::1] hi = np.ascontiguousarray(k_hi, dtype=np.float64)
    cdef Py_ssize_t m = lo.shape[0]
    cdef Py_ssize_t a, j
    cdef double c1 = cos(theta1), s1 = sin(theta1)
    cdef double c2sq = cos(theta2) * cos(theta2), s2sq = sin(theta2) * sin(theta2)
    cdef double s22 = sin(2.0 * theta2)
    cdef double a2 = s1 * s2sq - c1 * s22, b2 = -s1 * c2sq
    cdef double a3 = -s2sq, b3 = c2sq
    cdef double k, h, d2, d3, p2, p3, acc = 0.0
    with nogil:
        for a in range(m):
            h = (hi[a] - lo[a]) / n_per_arc
            p2 = a2 * cos(lo[a]) + b2 * cos(3.0 * lo[a])
            p3 = a3 * sin(lo[a]) + b3 * sin(3.0 * lo[a])
            for j in range(1, n_per_arc + 1):
                k = lo[a] + j * h
                d2 = a2 * cos(k) + b2 * cos(3.0 * k)
                d3 = a3 * sin(k) + b3 * sin(3.0 * k)
                acc += atan2(p2 * d3 - p3 * d2, p2 * d2 + p3 * d3)
                p2 = d2
                p3 = d3
    return acc
