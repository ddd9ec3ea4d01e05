"""Vectorised numpy implementations of the hot kernels."""

import numpy as np
from scipy.special import erfc

_INV_SQRT2 = 1.0 / np.sqrt(2.0)
_INV_SQRT2PI = 1.0 / np.sqrt(2.0 * np.pi)


def _edges(m, q, lam_nodes, t_max):
    sq = np.sqrt(q)
    b1 = -lam_nodes / sq
    if m != 0.0:
        b2 = -lam_nodes * sq / m
    else:
        b2 = b1
    lo = np.clip(np.minimum(b1, b2), -t_max, t_max)
    hi = np.clip(np.maximum(b1, b2), -t_max, t_max)
    full = np.full_like(lo, t_max)
    return np.stack([-full, lo, hi, full], axis=1)


def measurement_sums(m, q, q0, lam_nodes, lam_weights, gl_x, gl_w, t_max):
    """Gaussian averages of the penalty kernels over t and a discrete lambda law.

    With h = sqrt(q) t + lam, a = (m t / sqrt(q) + lam) / sqrt(q0 - m^2/q),
    returns
        s_u  = E[H(-a) u(-h) + H(a) u(h)]
        s_u2 = E[H(-a) u''(-h) + H(a) u''(h)]
        s_e  = E[exp(-a^2/2) (u'(h) + u'(-h))]
    The t-integral is split at h = 0 and a = 0 and truncated to |t| <= t_max.
    """
    lam_nodes = np.asarray(lam_nodes, dtype=np.float64)
    lam_weights = np.asarray(lam_weights, dtype=np.float64)
    sq = np.sqrt(q)
    sv = np.sqrt(q0 - m * m / q)
    edges = _edges(m, q, lam_nodes, t_max)  # (L, 4)
    half = 0.5 * np.diff(edges, axis=1)  # (L, 3)
    mid = 0.5 * (edges[:, 1:] + edges[:, :-1])
    t = mid[:, :, None] + half[:, :, None] * gl_x[None, None, :]  # (L, 3, G)
    w = (half[:, :, None] * gl_w[None, None, :]) * np.exp(-0.5 * t * t) * _INV_SQRT2PI
    w = w * lam_weights[:, None, None]
    lam = lam_nodes[:, None, None]
    h = sq * t + lam
    a = (m * t / sq + lam) / sv
    pos = h > 0
    neg = h < 0
    h_tail = np.where(pos, 0.5 * erfc(a * _INV_SQRT2), 0.5 * erfc(-a * _INV_SQRT2))
    active = pos | neg
    s_u = np.sum(w * np.where(active, h_tail * h * h, 0.0))
    s_u2 = np.sum(w * np.where(active, 2.0 * h_tail, 0.0))
    s_e = np.sum(w * np.exp(-0.5 * a * a) * 2.0 * np.abs(h))
    return float(s_u), float(s_u2), float(s_e)


def adaptive_trace(z, lam0, target, gamma, delta, u0, v0):
    """Run the online threshold recursion over precomputed projections z = Phi x0.

    Returns (y, lam_used, t_est, lam_final, u_final, v_final).
    """
    z = np.asarray(z, dtype=np.float64)
    n = z.shape[0]
    y = np.empty(n, dtype=np.int8)
    lam_used = np.empty(n, dtype=np.float64)
    t_est = np.empty(n, dtype=np.float64)
    lam = float(lam0)
    u = float(u0)
    v = float(v0)
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
