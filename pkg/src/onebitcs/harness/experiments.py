"""Monte Carlo trials: sample, measure, reconstruct, score."""

from __future__ import annotations

import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, replace

import numpy as np

from ..adaptive import AdaptiveParams, probe_init_lambda
from ..errors import DomainError
from ..model import (
    Adaptive,
    Fixed,
    GaussianRandom,
    SignalModel,
    derive_seed,
    directional_mse,
    empirical_mse,
    make_instance,
    make_rng,
    measure,
    to_db,
)
from ..recon import OPTIMAL, reconstruct
from ..replica import SaddleOptions, lambda_for_p, solve_saddle

# extra stream under a trial seed, used only for warm-start probe rows
PROBE_STREAM = 3

TRIAL_FIELDS = ["trial", "seed", "alpha", "strategy", "param", "lambda_final", "p_plus_emp",
                "mse", "mse_db", "dir_mse", "l1_hat", "l1_true", "status"]


@dataclass
class TrialRecord:
    trial: int
    seed: int
    alpha: float
    strategy: str
    param: float
    lambda_final: float
    p_plus_emp: float
    mse: float
    mse_db: float
    dir_mse: float
    l1_hat: float
    l1_true: float
    status: str
    wall_time: float = 0.0

    @property
    def ok(self) -> bool:
        return self.status == OPTIMAL

    def to_row(self, timing: bool = False) -> dict:
        row = asdict(self)
        if not timing:
            del row["wall_time"]
        return row


@dataclass(frozen=True)
class TrialSpec:
    n: int
    m: int
    model: SignalModel
    strategy: object
    feas_tol: float = 1e-8
    opt_tol: float = 1e-8
    probe: bool = False

    @property
    def alpha(self) -> float:
        return self.m / self.n


def strategy_param(strategy) -> float:
    if isinstance(strategy, Fixed):
        return strategy.lam
    if isinstance(strategy, GaussianRandom):
        return strategy.sigma_lambda
    if isinstance(strategy, Adaptive):
        return strategy.params.target_T
    raise DomainError(f"unsupported strategy {strategy!r}")


def _probe_lambda0(spec: TrialSpec, seed: int) -> float:
    """Warm-start lambda0 from extra probe rows (never used for reconstruction)."""
    from ..model import SIGNAL_STREAM, sample_signal

    x0 = sample_signal(spec.n, spec.model, derive_seed(seed, SIGNAL_STREAM))
    rng = make_rng(derive_seed(seed, PROBE_STREAM))

    def oracle(lam, size):
        phi = rng.normal(0.0, 1.0 / math.sqrt(spec.n), (size, spec.n))
        return measure(phi, x0, np.full(size, lam))

    params = spec.strategy.params
    return probe_init_lambda(oracle, params.lambda0, zero_step=max(params.delta, 0.01))


def run_trial(spec: TrialSpec, trial: int, seed: int) -> TrialRecord:
    start = time.perf_counter()
    strategy = spec.strategy
    if spec.probe and isinstance(strategy, Adaptive):
        lam0 = _probe_lambda0(spec, seed)
        strategy = Adaptive(replace(strategy.params, lambda0=lam0))
    inst = make_instance(spec.n, spec.m, spec.model, strategy, seed)
    res = reconstruct(inst, feas_tol=spec.feas_tol, opt_tol=spec.opt_tol)
    mse = empirical_mse(res.x_hat, inst.x0)
    try:
        dmse = directional_mse(res.x_hat, inst.x0)
    except DomainError:
        dmse = math.nan
    y_tail = inst.y[inst.m // 2:]
    if isinstance(strategy, Adaptive):
        p = strategy.params
        lam_final = float(inst.lambda_vec[-1])
        if p.delta > 0 and inst.m > 0:
            # threshold after the last update
            lam_final = _terminal_lambda(inst, p)
    else:
        lam_final = float(inst.lambda_vec[-1])
    return TrialRecord(
        trial=trial, seed=seed, alpha=spec.alpha, strategy=strategy.kind,
        param=float(strategy_param(strategy)), lambda_final=lam_final,
        p_plus_emp=float(np.mean(y_tail > 0)) if y_tail.size else math.nan,
        mse=mse, mse_db=to_db(mse), dir_mse=dmse,
        l1_hat=res.l1_norm, l1_true=float(np.sum(np.abs(inst.x0))),
        status=res.status, wall_time=time.perf_counter() - start,
    )


def _terminal_lambda(inst, params: AdaptiveParams) -> float:
    # replay the final update; lambda_vec holds thresholds before each update
    from ..adaptive import batch_T

    t_last = batch_T(inst.y, params.gamma)
    diff = params.target_T - t_last
    return float(inst.lambda_vec[-1] + params.delta * ((diff > 0) - (diff < 0)))


def _run_chunk(args):
    spec, items = args
    return [run_trial(spec, i, s) for i, s in items]


def default_jobs() -> int:
    env = os.environ.get("ONEBIT_JOBS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise DomainError(f"ONEBIT_JOBS must be an integer, got {env!r}") from None
    return os.cpu_count() or 1


def trial_seeds(master_seed: int, trials: int, offset: int = 0) -> list[tuple[int, int]]:
    """(trial index, seed) pairs; the seed depends only on master seed and index."""
    return [(i, derive_seed(master_seed, i)) for i in range(offset, offset + trials)]


def run_trials(spec: TrialSpec, trials: int, master_seed: int, jobs: int = 1) -> list[TrialRecord]:
    if trials < 1:
        raise DomainError("trials must be >= 1")
    items = trial_seeds(master_seed, trials)
    jobs = max(1, min(int(jobs), trials))
    if jobs == 1:
        records = _run_chunk((spec, items))
    else:
        chunks = [items[k::jobs] for k in range(jobs)]
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            records = [r for part in pool.map(_run_chunk, [(spec, c) for c in chunks]) for r in part]
    records.sort(key=lambda r: r.trial)
    return records


def replica_prediction(strategy, model: SignalModel, alpha: float, opts: SaddleOptions | None = None):
    """Matching replica solution; adaptive runs are compared with the fixed lambda hitting T."""
    if isinstance(strategy, Adaptive):
        strategy = Fixed(lambda_for_p(strategy.params.target_T, model))
    return solve_saddle(strategy, model, alpha, opts)


def summarize(records, prediction=None) -> dict:
    """Linear mean of successful-trial MSEs, its dB value and standard error."""
    ok = [r.mse for r in records if r.ok]
    n_ok = len(ok)
    mean = float(np.mean(ok)) if n_ok else math.nan
    stderr = float(np.std(ok, ddof=1) / math.sqrt(n_ok)) if n_ok > 1 else math.nan
    summary = {
        "trials": len(records),
        "n_ok": n_ok,
        "failure_fraction": (len(records) - n_ok) / len(records) if records else math.nan,
        "mean_mse": mean,
        "mean_mse_db": to_db(mean) if n_ok else math.nan,
        "stderr_mse": stderr,
    }
    if records:
        summary["alpha"] = records[0].alpha
        summary["strategy"] = records[0].strategy
        summary["param"] = records[0].param
        adaptive = [r.lambda_final for r in records if r.strategy == "adaptive"]
        if adaptive:
            summary["mean_lambda_final"] = float(np.mean(adaptive))
            summary["mean_p_plus_emp"] = float(np.mean([r.p_plus_emp for r in records]))
    if prediction is not None:
        summary["replica_mse"] = prediction.mse
        summary["replica_mse_db"] = prediction.mse_db
        summary["replica_param"] = prediction.param
        summary["replica_converged"] = prediction.converged
        if n_ok:
            summary["gap_db"] = summary["mean_mse_db"] - prediction.mse_db
    return summary


def simulate(spec: TrialSpec, trials: int, master_seed: int, jobs: int = 1, predict: bool = True):
    """Run ``trials`` independent trials; returns (records, summary)."""
    records = run_trials(spec, trials, master_seed, jobs)
    prediction = replica_prediction(spec.strategy, spec.model, spec.alpha) if predict else None
    return records, summarize(records, prediction)


def measurements_for(n: int, alpha: float) -> int:
    m = int(round(alpha * n))
    if m < 1:
        raise DomainError("alpha * n must round to at least one measurement")
    return m
