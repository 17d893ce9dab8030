"""Pure numpy versions of the hot loops; same signatures as ``_kernels``."""
from __future__ import annotations

import numpy as np

_PI = np.pi
_TWO_PI = 2.0 * np.pi


def _coefficients(theta1, theta2):
    c1, s1 = np.cos(theta1), np.sin(theta1)
    c2sq, s2sq = np.cos(theta2) ** 2, np.sin(theta2) ** 2
    s22 = np.sin(2.0 * theta2)
    a0 = -(c1 * s2sq + s1 * s22)
    b0 = c1 * c2sq
    a2 = s1 * s2sq - c1 * s22
    b2 = -s1 * c2sq
    return a0, b0, a2, b2, -s2sq, c2sq


def _increment_sum(d2, d3):
    """Sum of signed angles between consecutive (d2, d3) samples along the last axis."""
    p2, p3 = d2[..., :-1], d3[..., :-1]
    q2, q3 = d2[..., 1:], d3[..., 1:]
    return np.sum(np.arctan2(p2 * q3 - p3 * q2, p2 * q2 + p3 * q3), axis=-1)


def winding_and_gap(theta1, theta2, n_k, block=256):
    """Raw winding number and minimum gap for each (theta1[i], theta2[i]).

    The Brillouin zone is sampled at ``n_k`` points ``-pi + 2 pi j / n_k``
    and the angle of (d2, d3) is accumulated around the closed loop.
    """
    theta1 = np.ascontiguousarray(theta1, dtype=float)
    theta2 = np.ascontiguousarray(theta2, dtype=float)
    n = theta1.shape[0]
    k = -_PI + _TWO_PI * np.arange(n_k + 1) / n_k
    k[-1] = k[0]
    ck, c3k, sk, s3k = np.cos(k), np.cos(3 * k), np.sin(k), np.sin(3 * k)
    w_raw = np.empty(n)
    min_gap = np.empty(n)
    for start in range(0, n, block):
        sl = slice(start, min(start + block, n))
        a0, b0, a2, b2, a3, b3 = (c[:, None] for c in _coefficients(theta1[sl], theta2[sl]))
        d0 = a0 * ck + b0 * c3k
        d2 = a2 * ck + b2 * c3k
        d3 = a3 * sk + b3 * s3k
        r2 = d2 * d2 + d3 * d3
        jmin = np.argmin(r2[:, :-1], axis=1)
        rows = np.arange(r2.shape[0])
        min_gap[sl] = np.arctan2(np.sqrt(r2[rows, jmin]), np.abs(d0[rows, jmin]))
        w_raw[sl] = _increment_sum(d2, d3) / _TWO_PI
    return w_raw, min_gap


def arc_angle_sum(theta1, theta2, k_lo, k_hi, n_per_arc):
    """Accumulated angle of (d2, d3) along open arcs ``[k_lo[j], k_hi[j]]``.

    Each arc is cut into ``n_per_arc`` equal steps. Returns the total angle
    in radians (not divided by 2 pi).
    """
    k_lo = np.asarray(k_lo, dtype=float)
    k_hi = np.asarray(k_hi, dtype=float)
    a0, b0, a2, b2, a3, b3 = _coefficients(float(theta1), float(theta2))
    t = np.linspace(0.0, 1.0, int(n_per_arc) + 1)
    k = k_lo[:, None] + (k_hi - k_lo)[:, None] * t[None, :]
    d2 = a2 * np.cos(k) + b2 * np.cos(3 * k)
    d3 = a3 * np.sin(k) + b3 * np.sin(3 * k)
    return float(np.sum(_increment_sum(d2, d3)))
