"""l1 reconstruction from thresholded sign measurements, with optimality certificates.

The problem ``min ||x||_1  s.t.  y * (Phi x + lam) >= 0`` is posed as an LP in
the epigraph variables (x, u)::

    minimize   sum(u)
    subject to -y_mu (Phi x)_mu        <= y_mu lam_mu    (M rows)
                x_i - u_i              <= 0              (N rows)
               -x_i - u_i              <= 0              (N rows)

and solved with HiGHS dual simplex on the equivalent split form x = x+ - x-.
Certificates are re-checked on the epigraph LP from (x_hat, sign-block duals)
alone, without touching solver state.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linprog

from .errors import DomainError
from .model import Instance

OPTIMAL = "optimal"
INFEASIBLE_TOL = "infeasible-tolerance"
ITERATION_LIMIT = "iteration-limit"


@dataclass(frozen=True, eq=False)
class LpProblem:
    c: np.ndarray
    A_ub: np.ndarray
    b_ub: np.ndarray
    n: int
    m: int

    @property
    def sign_block(self) -> tuple[np.ndarray, np.ndarray]:
        """(A, b) restricted to the M sign-constraint rows and the x columns."""
        return self.A_ub[: self.m, : self.n], self.b_ub[: self.m]


@dataclass(eq=False)
class ReconResult:
    x_hat: np.ndarray
    l1_norm: float
    status: str
    max_violation: float
    cert_residual: float
    dual: np.ndarray | None = None
    iterations: int = 0

    def to_dict(self) -> dict:
        return {
            "x_hat": self.x_hat.tolist(),
            "l1_norm": self.l1_norm,
            "status": self.status,
            "max_violation": self.max_violation,
            "cert_residual": self.cert_residual,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


def _parts(instance_or_parts):
    if isinstance(instance_or_parts, Instance):
        inst = instance_or_parts
        return inst.phi, inst.lambda_vec, inst.y
    phi, lam, y = instance_or_parts
    return np.atleast_2d(np.asarray(phi, float)), np.asarray(lam, float), np.asarray(y, float)


def build_lp(instance) -> LpProblem:
    """Epigraph LP for an ``Instance`` or a ``(phi, lambda_vec, y)`` triple."""
    phi, lam, y = _parts(instance)
    m, n = phi.shape
    if lam.shape != (m,) or y.shape != (m,):
        raise DomainError(f"dimension mismatch: phi {phi.shape}, lambda {lam.shape}, y {y.shape}")
    y = y.astype(float)
    eye = np.eye(n)
    A = np.block([
        [-(y[:, None] * phi), np.zeros((m, n))],
        [eye, -eye],
        [-eye, -eye],
    ])
    b = np.concatenate([y * lam, np.zeros(2 * n)])
    c = np.concatenate([np.zeros(n), np.ones(n)])
    return LpProblem(c=c, A_ub=A, b_ub=b, n=n, m=m)


def certificate(x_hat: np.ndarray, dual: np.ndarray | None, problem: LpProblem) -> tuple[float, float]:
    """(max primal violation, certificate residual) on the epigraph LP.

    The residual is the larger of the dual infeasibility and the duality gap
    relative to max(1, objective). Box-row duals are reconstructed from the
    sign-row duals, so ``dual`` only carries the M sign-row multipliers.
    """
    n, m = problem.n, problem.m
    x_hat = np.asarray(x_hat, dtype=float)
    z = np.concatenate([x_hat, np.abs(x_hat)])
    violation = float(max(np.max(problem.A_ub @ z - problem.b_ub), 0.0))
    if dual is None:
        return violation, np.inf
    w_s = np.asarray(dual, dtype=float)
    A_s, b_s = problem.sign_block
    g = A_s.T @ w_s
    w_p = np.maximum((1.0 - g) / 2.0, 0.0)
    w_n = np.maximum((1.0 - (-g)) / 2.0, 0.0)
    w = np.concatenate([np.maximum(w_s, 0.0), w_p, w_n])
    dual_infeas = float(max(np.max(np.abs(problem.A_ub.T @ w + problem.c)), np.max(-w_s, initial=0.0)))
    primal_obj = float(problem.c @ z)
    dual_obj = float(-problem.b_ub @ w)
    gap = abs(primal_obj - dual_obj) / max(1.0, abs(primal_obj))
    return violation, max(dual_infeas, gap)


def reconstruct(instance, feas_tol: float = 1e-8, opt_tol: float = 1e-8, max_iter: int | None = None) -> ReconResult:
    """Certified minimiser of ||x||_1 over the sign-consistent region."""
    if not (feas_tol > 0 and opt_tol > 0):
        raise DomainError("tolerances must be positive")
    problem = build_lp(instance)
    phi, lam, y = _parts(instance)
    n = problem.n
    A_s, b_s = problem.sign_block
    options = {
        "primal_feasibility_tolerance": min(1e-10, feas_tol),
        "dual_feasibility_tolerance": min(1e-10, opt_tol),
    }
    if max_iter is not None:
        options["maxiter"] = int(max_iter)
    res = linprog(
        np.ones(2 * n),
        A_ub=np.hstack([A_s, -A_s]),
        b_ub=b_s,
        bounds=(0, None),
        method="highs-ds",
        options=options,
    )
    iters = int(getattr(res, "nit", 0) or 0)
    if res.x is None:
        status = ITERATION_LIMIT if res.status == 1 else INFEASIBLE_TOL
        x_hat = np.zeros(n)
        violation, _ = certificate(x_hat, None, problem)
        return ReconResult(x_hat=x_hat, l1_norm=0.0, status=status, max_violation=violation,
                           cert_residual=np.inf, dual=None, iterations=iters)
    x_hat = res.x[:n] - res.x[n:]
    dual = -np.asarray(res.ineqlin.marginals, dtype=float)
    violation, residual = certificate(x_hat, dual, problem)
    if res.status == 1:
        status = ITERATION_LIMIT
    elif res.status == 0 and violation <= feas_tol and residual <= opt_tol:
        status = OPTIMAL
    else:
        status = INFEASIBLE_TOL
    return ReconResult(x_hat=x_hat, l1_norm=float(np.sum(np.abs(x_hat))), status=status,
                       max_violation=violation, cert_residual=residual, dual=dual, iterations=iters)


def check_certificate(result: ReconResult, problem: LpProblem, feas_tol: float = 1e-8,
                      opt_tol: float = 1e-8) -> bool:
    """Independently re-verify primal feasibility and the optimality certificate."""
    try:
        violation, residual = certificate(result.x_hat, result.dual, problem)
    except (ValueError, TypeError):
        return False
    return bool(violation <= feas_tol and residual <= opt_tol)
