"""Scalar special functions and Gaussian-expectation quadrature.

``H(x)`` below is the upper tail of the standard normal,
``H(x) = P(Z > x)`` for ``Z ~ N(0, 1)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import special

from .errors import DomainError, EvaluationError

SQRT2 = math.sqrt(2.0)
SQRT2PI = math.sqrt(2.0 * math.pi)


def gauss_tail(x):
    """Upper Gaussian tail H(x) = P(Z > x).

    Accepts scalars or arrays. Uses the complementary error function, which
    keeps full relative accuracy in the far tail until the result itself
    drops below the smallest subnormal double (x ~ 38.5).
    """
    arr = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise DomainError(f"gauss_tail requires finite input, got {x!r}")
    out = 0.5 * special.erfc(arr / SQRT2)
    return float(out) if out.ndim == 0 else out


def gauss_tail_inv(p: float) -> float:
    """Return x with gauss_tail(x) == p, for 0 < p < 1."""
    p = float(p)
    if not (0.0 < p < 1.0):
        raise DomainError(f"gauss_tail_inv requires 0 < p < 1, got {p!r}")
    x = -float(special.ndtri(p))
    # Newton polish on H(x) - p; H'(x) = -pdf(x)
    for _ in range(3):
        pdf = math.exp(-0.5 * x * x) / SQRT2PI
        if pdf == 0.0:
            break
        step = (gauss_tail(x) - p) / pdf
        x += step
        if abs(step) < 1e-15 * max(1.0, abs(x)):
            break
    return x


def gauss_pdf(x):
    return np.exp(-0.5 * np.square(x)) / SQRT2PI


@dataclass(frozen=True)
class QuadratureRule:
    """Nodes and positive weights for expectations under the standard normal measure."""

    nodes: np.ndarray
    weights: np.ndarray
    order: int

    def __post_init__(self):
        if self.order < 2:
            raise DomainError("quadrature order must be >= 2")
        if len(self.nodes) != self.order or len(self.weights) != self.order:
            raise DomainError("nodes/weights length must equal order")
        if np.any(np.diff(self.nodes) <= 0):
            raise DomainError("quadrature nodes must be strictly increasing")
        if np.any(self.weights <= 0):
            raise DomainError("quadrature weights must be positive")
        self.nodes.setflags(write=False)
        self.weights.setflags(write=False)


@lru_cache(maxsize=None)
def gauss_hermite_rule(order: int = 101) -> QuadratureRule:
    """Probabilists' Gauss-Hermite rule for E[f(t)], t ~ N(0, 1)."""
    if order < 2:
        raise DomainError("quadrature order must be >= 2")
    x, w = np.polynomial.hermite_e.hermegauss(order)
    w = w / w.sum()
    return QuadratureRule(nodes=np.ascontiguousarray(x), weights=np.ascontiguousarray(w), order=order)


@lru_cache(maxsize=None)
def legendre_rule(order: int) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre nodes and weights on [-1, 1] (read-only arrays)."""
    x, w = np.polynomial.legendre.leggauss(order)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def kink_rule(breaks=(), order: int = 101, t_max: float = 10.0) -> QuadratureRule:
    """Piecewise Gauss-Legendre rule for E[f(t)], t ~ N(0, 1), truncated to |t| <= t_max.

    ``breaks`` are points where f has a kink; each piece gets ``order``
    Legendre nodes, so kinked integrands keep spectral accuracy.
    """
    if order < 2 or not t_max > 0:
        raise DomainError("need order >= 2 and t_max > 0")
    inner = sorted({min(max(float(b), -t_max), t_max) for b in breaks})
    edges = [-t_max] + [b for b in inner if -t_max < b < t_max] + [t_max]
    x, w = legendre_rule(order)
    nodes, weights = [], []
    for lo, hi in zip(edges[:-1], edges[1:]):
        half, mid = 0.5 * (hi - lo), 0.5 * (hi + lo)
        t = mid + half * x
        nodes.append(t)
        weights.append(half * w * gauss_pdf(t))
    nodes = np.concatenate(nodes)
    weights = np.concatenate(weights)
    keep = weights > 0  # far-tail nodes can underflow
    return QuadratureRule(nodes=nodes[keep], weights=weights[keep], order=int(keep.sum()))


def _evaluate(f, *grids):
    try:
        vals = np.asarray(f(*grids), dtype=float)
    except (TypeError, ValueError):
        vals = None
    if vals is None or vals.shape != grids[0].shape:
        flat = [float(f(*pt)) for pt in zip(*(g.ravel() for g in grids))]
        vals = np.asarray(flat, dtype=float).reshape(grids[0].shape)
    bad = ~np.isfinite(vals)
    if np.any(bad):
        idx = np.argwhere(bad)[0]
        node = tuple(float(g[tuple(idx)]) for g in grids)
        node = node[0] if len(node) == 1 else node
        raise EvaluationError(f"integrand is not finite at node {node}", node=node)
    return vals


def expect_1d(f, rule: QuadratureRule | None = None) -> float:
    """Approximate E[f(t)] for t ~ N(0, 1).

    ``f`` may be vectorised (called once on the node array) or scalar.
    """
    rule = rule or gauss_hermite_rule()
    vals = _evaluate(f, rule.nodes)
    return float(np.dot(rule.weights, vals))


def expect_2d(f, rule: QuadratureRule | None = None, inner=None) -> float:
    """Approximate E[f(t, r)] for independent t, r ~ N(0, 1) on a tensor grid.

    ``inner``, if given, maps an r-node to the rule used for t at that node
    (e.g. a ``kink_rule`` following a kink line); ``rule`` then covers r.
    """
    rule = rule or gauss_hermite_rule()
    if inner is not None:
        total = 0.0
        for r, w in zip(rule.nodes, rule.weights):
            sub = inner(float(r))
            vals = _evaluate(f, sub.nodes, np.full_like(sub.nodes, r))
            total += w * float(np.dot(sub.weights, vals))
        return total
    t, r = np.meshgrid(rule.nodes, rule.nodes, indexing="ij")
    vals = _evaluate(f, t, r)
    return float(rule.weights @ vals @ rule.weights)


def _check_finite(x, name="x"):
    arr = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise DomainError(f"{name} must be finite")
    return arr


def _out(arr):
    return float(arr) if arr.ndim == 0 else arr


# Theta(0) = 0 in all three kernels.
def u_fun(x):
    x = _check_finite(x)
    return _out(np.where(x > 0, x * x, 0.0))


def u_prime(x):
    x = _check_finite(x)
    return _out(np.where(x > 0, 2.0 * x, 0.0))


def u_second(x):
    x = _check_finite(x)
    return _out(np.where(x > 0, 2.0, 0.0))


def phi_fun(h, Q_hat: float):
    """min_x { Q_hat/2 x^2 - h x + |x| } in closed form."""
    if not Q_hat > 0:
        raise DomainError(f"Q_hat must be positive, got {Q_hat!r}")
    h = _check_finite(h, "h")
    excess = np.maximum(np.abs(h) - 1.0, 0.0)
    return _out(-0.5 * excess * excess / Q_hat)


def soft_threshold(h, Q_hat: float):
    """Minimiser of the variational problem defining ``phi_fun``."""
    h = np.asarray(h, dtype=float)
    return _out(np.sign(h) * np.maximum(np.abs(h) - 1.0, 0.0) / Q_hat)


_INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


def golden_section(f, lo: float, hi: float, width: float = 1e-4, max_iter: int = 200):
    """Minimise a unimodal scalar function on [lo, hi].

    Returns ``(x_best, f_best)``; the bracket endpoints are also compared, so a
    minimum sitting on the boundary is returned as such.
    """
    if hi < lo:
        lo, hi = hi, lo
    a, b = lo, hi
    x1 = b - _INV_PHI * (b - a)
    x2 = a + _INV_PHI * (b - a)
    f1, f2 = f(x1), f(x2)
    it = 0
    while b - a > width and it < max_iter:
        if f1 <= f2:
            b, x2, f2 = x2, x1, f1
            x1 = b - _INV_PHI * (b - a)
            f1 = f(x1)
        else:
            a, x1, f1 = x1, x2, f2
            x2 = a + _INV_PHI * (b - a)
            f2 = f(x2)
        it += 1
    x_best, f_best = (x1, f1) if f1 <= f2 else (x2, f2)
    for x_end in (lo, hi):
        f_end = f(x_end)
        if f_end < f_best:
            x_best, f_best = x_end, f_end
    return x_best, f_best
