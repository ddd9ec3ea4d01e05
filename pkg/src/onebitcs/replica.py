"""Replica-symmetric saddle point of l1 reconstruction from thresholded sign measurements.

Order parameters are the overlap ``m`` with the true signal, the self-overlap
``q`` and the zero-temperature susceptibility ``chi``; their conjugates are
``m_hat``, ``q_hat`` and ``Q_hat``. The measurement side enters through three
Gaussian averages (see ``_kernels.measurement_sums``), the prior side through
closed-form soft-threshold moments.

Conjugate updates are the stationarity conditions of ``free_energy``::

    q_hat = alpha / chi^2      * E[H(-a) u(-h) + H(a) u(h)]
    Q_hat = alpha / (2 chi)    * E[H(-a) u''(-h) + H(a) u''(h)]
    m_hat = alpha / (2 chi sqrt(2 pi V)) * E[exp(-a^2/2) (u'(h) + u'(-h))]

with h = sqrt(q) t + lam, V = rho sigma0^2 - m^2/q, a = (m t/sqrt(q) + lam)/sqrt(V).
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from . import _kernels
from .errors import DomainError, NumericalError, SingularityError
from .model import Fixed, GaussianRandom, SignalModel, to_db
from .numerics import gauss_tail, gauss_tail_inv, golden_section, legendre_rule

SQRT2PI = math.sqrt(2.0 * math.pi)
MARGIN = 1e-12
T_MAX = 10.0


@dataclass(frozen=True)
class OrderParams:
    m: float
    q: float
    chi: float

    def as_array(self) -> np.ndarray:
        return np.array([self.m, self.q, self.chi])


@dataclass(frozen=True)
class ConjugateParams:
    m_hat: float
    q_hat: float
    Q_hat: float


@dataclass
class SaddleOptions:
    damping: float = 0.5
    tol: float = 1e-10
    max_iter: int = 10_000
    quad_order: int = 101
    init: OrderParams | None = None
    # raise the damping when the residual stalls over this many iterations
    adapt_window: int = 30

    def __post_init__(self):
        if not (0.0 < self.damping < 1.0):
            raise DomainError("damping must lie in (0, 1)")
        if not self.tol > 0:
            raise DomainError("tol must be positive")
        if self.max_iter < 1:
            raise DomainError("max_iter must be >= 1")
        if self.quad_order < 2:
            raise DomainError("quad_order must be >= 2")


@dataclass
class ReplicaSolution:
    order: OrderParams
    conj: ConjugateParams
    mse: float
    mse_db: float
    residual: float
    iterations: int
    converged: bool
    model: SignalModel | None = None
    alpha: float | None = None
    strategy: Fixed | GaussianRandom | None = None
    # max-norm gap between the two default initialisations (None when warm-started)
    init_gap: float | None = None
    damping: float = field(default=0.5)

    @property
    def param(self) -> float:
        if isinstance(self.strategy, Fixed):
            return self.strategy.lam
        if isinstance(self.strategy, GaussianRandom):
            return self.strategy.sigma_lambda
        return math.nan

    @property
    def p_plus(self) -> float:
        if isinstance(self.strategy, Fixed):
            return p_plus(self.strategy.lam, self.model)
        return 0.5

    def to_record(self) -> dict:
        return {
            "rho": self.model.rho,
            "sigma0_sq": self.model.sigma0_sq,
            "alpha": self.alpha,
            "strategy": self.strategy.kind,
            "param": self.param,
            "m": self.order.m,
            "q": self.order.q,
            "chi": self.order.chi,
            "m_hat": self.conj.m_hat,
            "q_hat": self.conj.q_hat,
            "Q_hat": self.conj.Q_hat,
            "mse": self.mse,
            "mse_db": self.mse_db,
            "p_plus": self.p_plus,
            "converged": self.converged,
            "iterations": self.iterations,
            "residual": self.residual,
        }

    def to_dict(self) -> dict:
        rec = self.to_record()
        rec["init_gap"] = self.init_gap
        return rec


RECORD_FIELDS = ["rho", "sigma0_sq", "alpha", "strategy", "param", "m", "q", "chi", "m_hat", "q_hat",
                 "Q_hat", "mse", "mse_db", "p_plus", "converged", "iterations", "residual"]


def _threshold_law(strategy):
    """Effective fixed threshold and variance offset (lam, s2) of a strategy.

    Gaussian thresholds lam = sigma r are absorbed exactly: rotating (t, r) so
    that h depends on one coordinate, the orthogonal one integrates out in
    closed form (E_w H(c + d w) = H(c / sqrt(1 + d^2))). The averages then
    equal the zero-threshold ones at (m + s2, q + s2, rho sigma0^2 + s2), with
    s2 = sigma^2, up to a factor sqrt(V / V') on the exp-weighted kernel.
    """
    if isinstance(strategy, Fixed):
        return float(strategy.lam), 0.0
    if isinstance(strategy, GaussianRandom):
        return 0.0, float(strategy.sigma_lambda) ** 2
    raise DomainError(f"replica analysis needs a Fixed or GaussianRandom strategy, got {strategy!r}")


def _check_order(order: OrderParams, model: SignalModel) -> float:
    if not (order.q > 0 and order.chi > 0):
        raise DomainError(f"order parameters need q > 0 and chi > 0, got {order}")
    q0 = model.power
    var = q0 - order.m * order.m / order.q
    if var < MARGIN * q0:
        raise SingularityError(
            f"rho*sigma0^2 - m^2/q = {var:.3e} is below the margin {MARGIN * q0:.3e}", margin=var)
    return var


def measurement_averages(order: OrderParams, model: SignalModel, strategy, quad_order: int = 101):
    """(s_u, s_u2, s_e): the three Gaussian averages of the measurement side."""
    var = _check_order(order, model)
    lam, s2 = _threshold_law(strategy)
    m, q, q0 = order.m + s2, order.q + s2, model.power + s2
    gl_x, gl_w = legendre_rule(quad_order)
    s_u, s_u2, s_e = _kernels.measurement_sums(m, q, q0, np.array([lam]), np.array([1.0]), gl_x, gl_w, T_MAX)
    if s2 > 0.0:
        s_e *= math.sqrt(var / (q0 - m * m / q))
    return s_u, s_u2, s_e


def _conj_update(order, model, alpha, strategy, quad_order):
    if not alpha > 0:
        raise DomainError("alpha must be positive")
    var = _check_order(order, model)
    s_u, s_u2, s_e = measurement_averages(order, model, strategy, quad_order)
    chi = order.chi
    return ConjugateParams(
        m_hat=alpha * s_e / (2.0 * chi * math.sqrt(2.0 * math.pi * var)),
        q_hat=alpha * s_u / (chi * chi),
        Q_hat=alpha * s_u2 / (2.0 * chi),
    )


def conj_update_fixed(order: OrderParams, model: SignalModel, alpha: float, lam: float,
                      quad_order: int = 101) -> ConjugateParams:
    """Conjugate parameters for a threshold fixed at ``lam`` on every measurement."""
    return _conj_update(order, model, alpha, Fixed(lam), quad_order)


def conj_update_gaussian(order: OrderParams, model: SignalModel, alpha: float, sigma_lambda: float,
                         quad_order: int = 101) -> ConjugateParams:
    """Conjugate parameters for i.i.d. N(0, sigma_lambda^2) thresholds."""
    return _conj_update(order, model, alpha, GaussianRandom(sigma_lambda), quad_order)


def _soft_moments(s: float) -> tuple[float, float]:
    """For h ~ N(0, s): (P(|h| > 1) / 2, E[(|h| - 1)_+^2] / 2)."""
    if s <= 0.0:
        return 0.0, 0.0
    x = 1.0 / math.sqrt(s)
    tail = gauss_tail(x)
    second = (s + 1.0) * tail - math.sqrt(s / (2.0 * math.pi)) * math.exp(-0.5 * x * x)
    return tail, max(second, 0.0)


def order_update(conj: ConjugateParams, model: SignalModel) -> OrderParams:
    """Order parameters implied by the conjugates (soft-threshold moments)."""
    if not conj.Q_hat > 0:
        raise DomainError(f"Q_hat must be positive, got {conj.Q_hat!r}")
    if conj.q_hat < 0:
        raise DomainError(f"q_hat must be non-negative, got {conj.q_hat!r}")
    rho, s2 = model.rho, model.sigma0_sq
    v = conj.q_hat + conj.m_hat * conj.m_hat * s2
    tail0, sec0 = _soft_moments(conj.q_hat)
    tail1, sec1 = _soft_moments(v)
    Qh = conj.Q_hat
    return OrderParams(
        m=2.0 * rho * conj.m_hat * s2 * tail1 / Qh,
        q=2.0 / (Qh * Qh) * ((1.0 - rho) * sec0 + rho * sec1),
        chi=2.0 / Qh * ((1.0 - rho) * tail0 + rho * tail1),
    )


def replica_mse(order: OrderParams, model: SignalModel) -> float:
    """Typical per-component MSE q + rho sigma0^2 - 2m."""
    val = order.q + model.power - 2.0 * order.m
    if val < 0:
        if val >= -1e-10:
            return 0.0
        raise DomainError(f"negative MSE {val:.3e}: order parameters violate Cauchy-Schwarz")
    return val


def p_plus(lam: float, model: SignalModel) -> float:
    """P(y = +1) for a fixed threshold ``lam``."""
    return gauss_tail(-lam / math.sqrt(model.power))


def lambda_for_p(target: float, model: SignalModel) -> float:
    """Fixed threshold giving P(y = +1) == target."""
    # + 0.0 normalises -0.0 at target 0.5
    return -math.sqrt(model.power) * gauss_tail_inv(target) + 0.0


def _project(x: np.ndarray, q0: float) -> np.ndarray:
    m, q = x[0], x[1]
    limit = q * q0 * (1.0 - MARGIN)
    if m * m > limit:
        x[0] = math.copysign(math.sqrt(limit), m)
    return x


def _iterate(strategy, model, alpha, opts: SaddleOptions, init: OrderParams):
    q0 = model.power
    x = _project(init.as_array().astype(float), q0)
    damping = opts.damping
    checkpoint = math.inf
    residual = math.inf
    conj = None
    for it in range(1, opts.max_iter + 1):
        order = OrderParams(*x)
        conj = _conj_update(order, model, alpha, strategy, opts.quad_order)
        prop = order_update(conj, model).as_array()
        if not np.all(np.isfinite(prop)):
            raise NumericalError(f"non-finite iterate after {it} steps", history_length=it)
        residual = float(np.max(np.abs(prop - x)))
        if residual <= opts.tol:
            return order, conj, residual, it, True, damping
        if it % opts.adapt_window == 0:
            if residual > 0.9 * checkpoint:
                damping = min(0.995, 1.0 - 0.5 * (1.0 - damping))
            checkpoint = residual
        x = damping * x + (1.0 - damping) * prop
        if x[1] <= 0 or x[2] <= 0:
            raise NumericalError(f"q or chi left the positive half-line after {it} steps", history_length=it)
        x = _project(x, q0)
    return OrderParams(*x), conj, residual, opts.max_iter, False, damping


def default_inits(model: SignalModel) -> tuple[OrderParams, OrderParams]:
    q0 = model.power
    return OrderParams(0.5 * q0, 0.5 * q0, 1.0), OrderParams(0.01 * q0, q0, 10.0)


def _solution(order, conj, residual, it, converged, damping, model, alpha, strategy, gap=None):
    mse = replica_mse(order, model)
    return ReplicaSolution(order=order, conj=conj, mse=mse, mse_db=to_db(mse), residual=residual,
                           iterations=it, converged=converged, model=model, alpha=alpha,
                           strategy=strategy, init_gap=gap, damping=damping)


def solve_saddle(strategy, model: SignalModel, alpha: float, opts: SaddleOptions | None = None) -> ReplicaSolution:
    """Damped fixed-point iteration of the saddle-point equations.

    Without ``opts.init`` both default initialisations are run and the result
    only counts as converged if they agree to within 10 * tol.
    """
    opts = opts or SaddleOptions()
    if not alpha > 0:
        raise DomainError("alpha must be positive")
    _threshold_law(strategy)
    if opts.init is not None:
        res = _iterate(strategy, model, alpha, opts, opts.init)
        return _solution(*res, model, alpha, strategy)
    informed, cold = default_inits(model)
    a = _iterate(strategy, model, alpha, opts, informed)
    b = _iterate(strategy, model, alpha, opts, cold)
    gap = float(np.max(np.abs(a[0].as_array() - b[0].as_array())))
    converged = a[4] and b[4] and gap <= 10.0 * opts.tol
    sol = _solution(*a, model, alpha, strategy, gap=gap)
    sol.converged = converged
    sol.iterations = a[3] + b[3]
    return sol


def one_step_residual(sol: ReplicaSolution, quad_order: int = 101) -> float:
    """Max-norm change of (m, q, chi) under one undamped full update at ``sol``."""
    conj = _conj_update(sol.order, sol.model, sol.alpha, sol.strategy, quad_order)
    prop = order_update(conj, sol.model)
    return float(np.max(np.abs(prop.as_array() - sol.order.as_array())))


def prior_average(conj: ConjugateParams, model: SignalModel) -> float:
    """E over z ~ N(0,1) and x0 of phi(sqrt(q_hat) z + m_hat x0; Q_hat)."""
    rho, s2 = model.rho, model.sigma0_sq
    _, sec0 = _soft_moments(conj.q_hat)
    _, sec1 = _soft_moments(conj.q_hat + conj.m_hat * conj.m_hat * s2)
    return -((1.0 - rho) * sec0 + rho * sec1) / conj.Q_hat


def free_energy(order: OrderParams, conj: ConjugateParams, model: SignalModel, alpha: float,
                strategy, quad_order: int = 101) -> float:
    """Replica-symmetric free energy density at zero temperature.

    Its stationary point in all six arguments is the saddle point; the
    stationary value is the typical l1 norm per component of the solution.
    """
    if not conj.Q_hat > 0:
        raise DomainError("Q_hat must be positive")
    s_u, _, _ = measurement_averages(order, model, strategy, quad_order)
    return (prior_average(conj, model)
            - 0.5 * conj.Q_hat * order.q
            + 0.5 * conj.q_hat * order.chi
            + conj.m_hat * order.m
            + alpha * s_u / (2.0 * order.chi))


@dataclass
class EnvelopeOptions:
    n_grid: int = 61
    upper: float | None = None
    width: float = 1e-4
    grid: tuple[float, ...] | None = None


@dataclass
class EnvelopeResult:
    family: str
    param_opt: float
    mse_opt: float
    solution: ReplicaSolution
    trusted: bool
    grid: np.ndarray
    grid_mse: np.ndarray

    @property
    def mse_opt_db(self) -> float:
        return to_db(self.mse_opt)

    @property
    def p_plus_opt(self) -> float:
        return self.solution.p_plus


def _family_strategy(family: str, value: float):
    if family == "fixed":
        return Fixed(float(value))
    if family == "gaussian":
        return GaussianRandom(float(value))
    raise DomainError(f"unknown threshold family {family!r}")


def envelope_grid(model: SignalModel, alpha: float, search: EnvelopeOptions) -> np.ndarray:
    if search.grid is not None:
        grid = np.asarray(sorted(search.grid), dtype=float)
        if grid.size == 0 or np.any(grid < 0):
            raise DomainError("envelope grid must be non-empty and non-negative")
        return grid
    upper = search.upper if search.upper is not None else 3.0 * math.sqrt(model.power) * max(1.0, math.sqrt(alpha))
    return np.linspace(0.0, upper, search.n_grid)


def envelope(family: str, model: SignalModel, alpha: float, search: EnvelopeOptions | None = None,
             opts: SaddleOptions | None = None) -> EnvelopeResult:
    """Minimise replica MSE over lambda >= 0 (fixed) or sigma_lambda >= 0 (gaussian).

    Coarse grid (solved from the top down, each point warm-started from its
    neighbour) followed by golden-section refinement of the best bracket.
    MSE is even in lambda, so only lambda >= 0 is searched.
    """
    search = search or EnvelopeOptions()
    opts = opts or SaddleOptions()
    grid = envelope_grid(model, alpha, search)
    sols: dict[float, ReplicaSolution] = {}
    start = solve_saddle(_family_strategy(family, grid[-1]), model, alpha, replace(opts, init=None))
    sols[float(grid[-1])] = start
    prev = start
    for value in grid[-2::-1]:
        init = prev.order if prev.converged else None
        sol = solve_saddle(_family_strategy(family, value), model, alpha, replace(opts, init=init))
        sols[float(value)] = sol
        if sol.converged and sol.order.q > 1e-6 * model.power:
            prev = sol
    grid_mse = np.array([sols[float(v)].mse for v in grid])
    i = int(np.argmin(grid_mse))
    if grid.size >= 2:
        lo = float(grid[max(i - 1, 0)])
        hi = float(grid[min(i + 1, grid.size - 1)])
        warm = sols[float(grid[i])]

        def objective(value):
            value = float(value)
            if value not in sols:
                init = warm.order if warm.converged and warm.order.q > 1e-6 * model.power else None
                sols[value] = solve_saddle(_family_strategy(family, value), model, alpha,
                                           replace(opts, init=init))
            return sols[value].mse

        best, _ = golden_section(objective, lo, hi, width=search.width)
    else:
        best = float(grid[0])
    sol = sols[float(best)]
    trusted = all(s.converged for s in sols.values())
    return EnvelopeResult(family=family, param_opt=float(best), mse_opt=sol.mse, solution=sol,
                          trusted=trusted, grid=grid, grid_mse=grid_mse)


def sweep(strategy_family: str, values, model: SignalModel, alpha: float,
          opts: SaddleOptions | None = None) -> list[ReplicaSolution]:
    """Independent dual-initialised solves over a parameter grid."""
    return [solve_saddle(_family_strategy(strategy_family, v), model, alpha, opts) for v in values]


def solution_to_json_dict(sol: ReplicaSolution) -> dict:
    d = sol.to_dict()
    d["order"] = asdict(sol.order)
    d["conj"] = asdict(sol.conj)
    return d
