"""numba-compiled implementations of the hot kernels (same contracts as ``_numpy``)."""

import math

import numpy as np
from numba import njit

_INV_SQRT2 = 1.0 / math.sqrt(2.0)
_INV_SQRT2PI = 1.0 / math.sqrt(2.0 * math.pi)


@njit(cache=True)
def _accumulate(lo, hi, lam, lam_w, m, sq, sv, gl_x, gl_w, acc):
    half = 0.5 * (hi - lo)
    if half <= 0.0:
        return
    mid = 0.5 * (hi + lo)
    for j in range(gl_x.shape[0]):
        t = mid + half * gl_x[j]
        w = half * gl_w[j] * math.exp(-0.5 * t * t) * _INV_SQRT2PI * lam_w
        h = sq * t + lam
        a = (m * t / sq + lam) / sv
        if h > 0.0:
            tail = 0.5 * math.erfc(a * _INV_SQRT2)
            acc[0] += w * tail * h * h
            acc[1] += w * 2.0 * tail
            acc[2] += w * math.exp(-0.5 * a * a) * 2.0 * h
        elif h < 0.0:
            tail = 0.5 * math.erfc(-a * _INV_SQRT2)
            acc[0] += w * tail * h * h
            acc[1] += w * 2.0 * tail
            acc[2] -= w * math.exp(-0.5 * a * a) * 2.0 * h


@njit(cache=True)
def _measurement_sums(m, q, q0, lam_nodes, lam_weights, gl_x, gl_w, t_max):
    sq = math.sqrt(q)
    sv = math.sqrt(q0 - m * m / q)
    acc = np.zeros(3)
    for i in range(lam_nodes.shape[0]):
        lam = lam_nodes[i]
        b1 = -lam / sq
        b2 = -lam * sq / m if m != 0.0 else b1
        lo = min(max(min(b1, b2), -t_max), t_max)
        hi = min(max(max(b1, b2), -t_max), t_max)
        _accumulate(-t_max, lo, lam, lam_weights[i], m, sq, sv, gl_x, gl_w, acc)
        _accumulate(lo, hi, lam, lam_weights[i], m, sq, sv, gl_x, gl_w, acc)
        _accumulate(hi, t_max, lam, lam_weights[i], m, sq, sv, gl_x, gl_w, acc)
    return acc[0], acc[1], acc[2]


def measurement_sums(m, q, q0, lam_nodes, lam_weights, gl_x, gl_w, t_max):
    s_u, s_u2, s_e = _measurement_sums(
        float(m), float(q), float(q0),
        np.ascontiguousarray(lam_nodes, dtype=np.float64),
        np.ascontiguousarray(lam_weights, dtype=np.float64),
        np.ascontiguousarray(gl_x, dtype=np.float64),
        np.ascontiguousarray(gl_w, dtype=np.float64),
        float(t_max),
    )
    return float(s_u), float(s_u2), float(s_e)


@njit(cache=True)
def _adaptive_trace(z, lam0, target, gamma, delta, u0, v0):
    n = z.shape[0]
    y = np.empty(n, dtype=np.int8)
    lam_used = np.empty(n, dtype=np.float64)
    t_est = np.empty(n, dtype=np.float64)
    lam = lam0
    u = u0
    v = v0
    for k in range(n):
        lam_used[k] = lam
        yk = 1 if z[k] + lam >= 0.0 else -1
        y[k] = yk
        u = (1.0 if yk > 0 else 0.0) + gamma * u
        v = 1.0 + gamma * v
        tk = u / v
        t_est[k] = tk
        diff = target - tk
        if diff > 0.0:
            lam += delta
        elif diff < 0.0:
            lam -= delta
    return y, lam_used, t_est, lam, u, v


def adaptive_trace(z, lam0, target, gamma, delta, u0, v0):
    y, lam_used, t_est, lam, u, v = _adaptive_trace(
        np.ascontiguousarray(z, dtype=np.float64),
        float(lam0), float(target), float(gamma), float(delta), float(u0), float(v0),
    )
    return y, lam_used, t_est, float(lam), float(u), float(v)
