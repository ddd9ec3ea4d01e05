"""Online threshold learning for sequential 1-bit measurements.

The positive-output rate is tracked with a geometrically damped average and
the threshold is nudged by a fixed step toward the target rate after every
measurement. The threshold used for measurement k is the one produced after
measurement k-1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import DomainError
from .model import sample_matrix


@dataclass(frozen=True)
class AdaptiveParams:
    target_T: float = 0.8
    gamma: float = 0.8
    delta: float = 0.01
    lambda0: float = 0.5

    def __post_init__(self):
        if not (0.0 < self.target_T < 1.0):
            raise DomainError(f"target_T must lie in (0, 1), got {self.target_T!r}")
        if not (0.0 < self.gamma < 1.0):
            raise DomainError(f"gamma must lie in (0, 1), got {self.gamma!r}")
        if not self.delta >= 0.0:
            raise DomainError(f"delta must be non-negative, got {self.delta!r}")
        if not math.isfinite(self.lambda0):
            raise DomainError("lambda0 must be finite")


@dataclass(frozen=True)
class AdaptiveState:
    k: int
    U: float
    V: float
    T_est: float
    lambda_cur: float

    @classmethod
    def initial(cls, params: AdaptiveParams) -> AdaptiveState:
        # T_est is undefined until the first measurement
        return cls(k=0, U=0.0, V=0.0, T_est=math.nan, lambda_cur=params.lambda0)


def _sign0(x: float) -> int:
    return (x > 0) - (x < 0)


def adaptive_step(state: AdaptiveState, phi_row, x0, params: AdaptiveParams) -> tuple[int, AdaptiveState]:
    """Measure with the current threshold, then update the rate estimate and the threshold."""
    phi_row = np.asarray(phi_row, dtype=float)
    x0 = np.asarray(x0, dtype=float)
    if phi_row.shape != x0.shape:
        raise DomainError(f"row length {phi_row.shape} does not match signal length {x0.shape}")
    y = 1 if float(phi_row @ x0) + state.lambda_cur >= 0.0 else -1
    U = (1.0 if y > 0 else 0.0) + params.gamma * state.U
    V = 1.0 + params.gamma * state.V
    T_est = U / V
    lam = state.lambda_cur + params.delta * _sign0(params.target_T - T_est)
    return y, AdaptiveState(k=state.k + 1, U=U, V=V, T_est=T_est, lambda_cur=lam)


def batch_T(y_history, gamma: float) -> float:
    """Damped positive-output rate of a whole history, most recent entry weighted 1."""
    y = np.asarray(y_history)
    if y.size == 0:
        raise DomainError("empty history")
    weights = gamma ** np.arange(y.size)
    hits = (y[::-1] == 1).astype(float)
    return float(np.dot(weights, hits) / np.sum(weights))


def probe_init_lambda(measure_oracle, lambda_seed: float, probe_size: int = 16, max_rounds: int = 30,
                      zero_step: float = 0.01) -> float:
    """Pick a starting threshold whose outputs are mixed.

    ``measure_oracle(lam, size)`` returns ``size`` fresh +-1 outputs taken at
    threshold ``lam``. All +1 lowers the threshold, all -1 raises it, by
    halving or doubling its magnitude; from exactly zero the first move is
    ``zero_step`` in the needed direction.
    """
    if probe_size < 4:
        raise DomainError("probe_size must be >= 4")
    lam = float(lambda_seed)
    for _ in range(max_rounds):
        y = np.asarray(measure_oracle(lam, probe_size))
        n_pos = int(np.sum(y > 0))
        if 0 < n_pos < y.size:
            return lam
        lower = n_pos == y.size
        if lam == 0.0:
            lam = -zero_step if lower else zero_step
        elif (lam > 0) == lower:
            lam *= 0.5
        else:
            lam *= 2.0
    return lam


@dataclass
class AdaptiveTrace:
    y: np.ndarray
    lambda_vec: np.ndarray
    T_est: np.ndarray
    final_state: AdaptiveState

    def rows(self):
        """Trajectory rows (k, lambda, y, T_est), k starting at 1."""
        for k in range(self.y.size):
            yield {"k": k + 1, "lambda": float(self.lambda_vec[k]), "y": int(self.y[k]),
                   "T_est": float(self.T_est[k])}


def run_adaptive_trace(x0, phi, params: AdaptiveParams, state: AdaptiveState | None = None,
                       kernels=None) -> AdaptiveTrace:
    """Run the recursion over all rows of ``phi``."""
    kernels = kernels or _kernels
    state = state or AdaptiveState.initial(params)
    z = np.asarray(phi, dtype=float) @ np.asarray(x0, dtype=float)
    y, lam_used, t_est, lam, U, V = kernels.adaptive_trace(
        z, state.lambda_cur, params.target_T, params.gamma, params.delta, state.U, state.V)
    final = AdaptiveState(k=state.k + z.size, U=U, V=V,
                          T_est=float(t_est[-1]) if z.size else state.T_est, lambda_cur=lam)
    return AdaptiveTrace(y=y, lambda_vec=lam_used, T_est=t_est, final_state=final)


def run_adaptive(x0, m: int, params: AdaptiveParams, seed: int):
    """Draw Phi (M x N, N(0, 1/N)) from ``seed`` and measure adaptively.

    Returns ``(y, lambda_vec, phi)`` where ``lambda_vec[k]`` is the threshold
    used for measurement k.
    """
    x0 = np.asarray(x0, dtype=float)
    phi = sample_matrix(m, x0.size, seed)
    trace = run_adaptive_trace(x0, phi, params)
    return trace.y, trace.lambda_vec, phi
