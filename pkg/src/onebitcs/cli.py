"""Command-line entry point: ``onebit <command> ...``.

Exit codes: 0 success, 2 usage error, 3 every row failed numerically.
"""

from __future__ import annotations

import argparse
import math
import sys
from dataclasses import replace

import numpy as np

from .adaptive import AdaptiveParams
from .errors import DomainError
from .harness.config import ConfigError, SweepConfig, load_config
from .harness.experiments import (
    TRIAL_FIELDS,
    TrialSpec,
    default_jobs,
    measurements_for,
    replica_prediction,
    run_trials,
    summarize,
)
from .harness.io import json_text, write_csv, write_json
from .model import Adaptive, Fixed, GaussianRandom, SignalModel
from .replica import RECORD_FIELDS, EnvelopeOptions, SaddleOptions, envelope, lambda_for_p, p_plus, sweep

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_NUMERICAL = 3

ENVELOPE_FIELDS = ["alpha", "family", "param_opt", "mse_opt", "mse_opt_db", "p_plus_opt",
                   "rho", "sigma0_sq", "trusted"]


class UsageError(Exception):
    pass


def parse_grid(text: str) -> list[float]:
    """``a:b:n`` (n evenly spaced points, ends included) or a comma list."""
    text = text.strip()
    if not text:
        raise UsageError("empty grid")
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise UsageError(f"grid {text!r} must look like start:stop:count")
        try:
            a, b, n = float(parts[0]), float(parts[1]), int(parts[2])
        except ValueError:
            raise UsageError(f"malformed grid {text!r}") from None
        if n < 1:
            raise UsageError(f"grid {text!r} is empty")
        return [float(v) for v in np.linspace(a, b, n)]
    try:
        values = [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise UsageError(f"malformed list {text!r}") from None
    if not values:
        raise UsageError("empty grid")
    return values


def _models(args) -> list[SignalModel]:
    rhos = parse_grid(args.rho)
    if getattr(args, "power", None):
        powers = parse_grid(args.power)
        return [SignalModel(r, p / r) for r in rhos for p in powers]
    if args.sigma0sq is None:
        raise UsageError("one of --sigma0sq or --power is required")
    return [SignalModel(r, s) for r in rhos for s in parse_grid(args.sigma0sq)]


def _model(args) -> SignalModel:
    models = _models(args)
    if len(models) != 1:
        raise UsageError("this command takes a single (rho, sigma0sq) pair")
    return models[0]


def _saddle_opts(args) -> SaddleOptions:
    return SaddleOptions(tol=args.tol, quad_order=args.quad_order)


def _add_model(p, multi=False):
    p.add_argument("--rho", required=True, help="sparsity" + (" (list or grid)" if multi else ""))
    p.add_argument("--sigma0sq", help="non-zero component variance")
    if multi:
        p.add_argument("--power", help="rho * sigma0sq; alternative to --sigma0sq")


def _add_saddle(p):
    p.add_argument("--tol", type=float, default=1e-10)
    p.add_argument("--quad-order", type=int, default=101)


def cmd_replica(args) -> int:
    model = _model(args)
    if args.strategy == "fixed":
        if args.lambda_grid is None:
            raise UsageError("--lambda-grid is required for the fixed strategy")
        grid = parse_grid(args.lambda_grid)
    else:
        if args.sigma_grid is None:
            raise UsageError("--sigma-grid is required for the gaussian strategy")
        grid = parse_grid(args.sigma_grid)
    alpha = float(args.alpha)
    sols = sweep(args.strategy, grid, model, alpha, _saddle_opts(args))
    write_csv([s.to_record() for s in sols], args.output, RECORD_FIELDS)
    return EXIT_OK if any(s.converged for s in sols) else EXIT_NUMERICAL


def cmd_envelope(args) -> int:
    alphas = parse_grid(args.alpha)
    families = ["fixed", "gaussian"] if args.family == "both" else [args.family]
    search = EnvelopeOptions(n_grid=args.n_grid, width=args.width)
    rows = []
    for model in _models(args):
        for alpha in alphas:
            for family in families:
                res = envelope(family, model, alpha, search, _saddle_opts(args))
                rows.append({
                    "alpha": alpha, "family": family, "param_opt": res.param_opt,
                    "mse_opt": res.mse_opt, "mse_opt_db": res.mse_opt_db,
                    "p_plus_opt": res.p_plus_opt, "rho": model.rho,
                    "sigma0_sq": model.sigma0_sq, "trusted": res.trusted,
                })
    write_csv(rows, args.output, ENVELOPE_FIELDS)
    return EXIT_OK if any(r["trusted"] for r in rows) else EXIT_NUMERICAL


def _threshold_value(text: str | None, family: str, model: SignalModel, alpha: float, name: str) -> float:
    if text is None:
        raise UsageError(f"--{name} is required for the {family} strategy")
    if text == "opt":
        return envelope(family, model, alpha).param_opt
    try:
        return float(text)
    except ValueError:
        raise UsageError(f"--{name} must be a number or 'opt'") from None


def _strategy(args, model, alpha):
    if args.strategy == "fixed":
        return Fixed(_threshold_value(args.lam, "fixed", model, alpha, "lambda"))
    if args.strategy == "gaussian":
        return GaussianRandom(_threshold_value(args.sigma_lambda, "gaussian", model, alpha, "sigma-lambda"))
    return Adaptive(AdaptiveParams(target_T=args.T, gamma=args.gamma, delta=args.delta, lambda0=args.lambda0))


def _emit(records, summary, args) -> int:
    fields = TRIAL_FIELDS + (["wall_time"] if args.timing else [])
    write_csv([r.to_row(timing=args.timing) for r in records], args.output, fields)
    if args.summary:
        write_json(summary, args.summary)
    else:
        # keep stdout clean when the CSV itself goes there
        stream = sys.stderr if args.output in (None, "-") else sys.stdout
        stream.write(json_text(summary))
    return EXIT_OK if any(r.ok for r in records) else EXIT_NUMERICAL


def cmd_simulate(args) -> int:
    model = _model(args)
    alpha = float(args.alpha)
    if args.n < 8:
        raise UsageError("--n must be >= 8")
    if args.trials < 1:
        raise UsageError("--trials must be >= 1")
    spec = TrialSpec(n=args.n, m=measurements_for(args.n, alpha), model=model,
                     strategy=_strategy(args, model, alpha), feas_tol=args.feas_tol,
                     opt_tol=args.opt_tol, probe=args.probe)
    records = run_trials(spec, args.trials, args.seed, args.jobs)
    prediction = None if args.no_predict else replica_prediction(spec.strategy, model, spec.alpha)
    return _emit(records, summarize(records, prediction), args)


def cmd_pplus(args) -> int:
    model = _model(args)
    if (args.lam is None) == (args.target is None):
        raise UsageError("give exactly one of --lambda and --target")
    if args.lam is not None:
        lam = float(args.lam)
        out = {"rho": model.rho, "sigma0_sq": model.sigma0_sq, "lambda": lam, "p_plus": p_plus(lam, model)}
    else:
        lam = lambda_for_p(args.target, model)
        out = {"rho": model.rho, "sigma0_sq": model.sigma0_sq, "lambda": lam, "p_plus": args.target}
    write_json(out, args.output)
    return EXIT_OK


def _sweep_specs(cfg: SweepConfig):
    strat = cfg.strategy
    tol = cfg.tolerances
    for alpha in cfg.alphas:
        m = measurements_for(cfg.n, alpha)
        if strat["family"] == "adaptive":
            p = AdaptiveParams(**{k: float(strat[j]) for j, k in
                                  (("T", "target_T"), ("gamma", "gamma"), ("delta", "delta"),
                                   ("lambda0", "lambda0")) if j in strat})
            values = [Adaptive(p)]
        elif strat["params"] == "envelope":
            values = [Fixed(envelope("fixed", cfg.model, alpha).param_opt) if strat["family"] == "fixed"
                      else GaussianRandom(envelope("gaussian", cfg.model, alpha).param_opt)]
        else:
            cls = Fixed if strat["family"] == "fixed" else GaussianRandom
            values = [cls(float(v)) for v in strat["params"]]
        for strategy in values:
            yield TrialSpec(n=cfg.n, m=m, model=cfg.model, strategy=strategy,
                            feas_tol=tol["feas_tol"], opt_tol=tol["opt_tol"],
                            probe=bool(strat.get("probe", False)))


def cmd_sweep(args) -> int:
    try:
        cfg = load_config(args.config)
    except (OSError, ValueError) as exc:
        raise UsageError(str(exc)) from None
    overrides = {k: v for k, v in (("trials", args.trials), ("n", args.n), ("master_seed", args.seed),
                                   ("output", args.output)) if v is not None}
    cfg = replace(cfg, **overrides)
    all_rows, summaries, any_ok = [], [], False
    opts = SaddleOptions(tol=cfg.tolerances["saddle_tol"])
    for spec in _sweep_specs(cfg):
        records = run_trials(spec, cfg.trials, cfg.master_seed, args.jobs)
        any_ok = any_ok or any(r.ok for r in records)
        summaries.append(summarize(records, replica_prediction(spec.strategy, cfg.model, spec.alpha, opts)))
        all_rows.extend(r.to_row(timing=args.timing) for r in records)
    fields = TRIAL_FIELDS + (["wall_time"] if args.timing else [])
    write_csv(all_rows, cfg.output, fields)
    summary_path = "-" if cfg.output in (None, "-") else f"{cfg.output}.summary.json"
    write_json({"config": cfg.to_dict(), "points": summaries}, summary_path)
    return EXIT_OK if any_ok else EXIT_NUMERICAL


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="onebit", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("replica", help="replica MSE over a threshold grid")
    p.add_argument("--strategy", choices=["fixed", "gaussian"], required=True)
    _add_model(p)
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--lambda-grid")
    p.add_argument("--sigma-grid")
    _add_saddle(p)
    p.add_argument("-o", "--output", default="-")
    p.set_defaults(func=cmd_replica)

    p = sub.add_parser("envelope", help="optimally tuned replica MSE per alpha")
    p.add_argument("--family", choices=["fixed", "gaussian", "both"], default="both")
    _add_model(p, multi=True)
    p.add_argument("--alpha", required=True, help="list or start:stop:count grid")
    p.add_argument("--n-grid", type=int, default=61)
    p.add_argument("--width", type=float, default=1e-4)
    _add_saddle(p)
    p.add_argument("-o", "--output", default="-")
    p.set_defaults(func=cmd_envelope)

    p = sub.add_parser("simulate", help="Monte Carlo reconstruction trials")
    p.add_argument("--strategy", choices=["fixed", "gaussian", "adaptive"], required=True)
    _add_model(p)
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--n", type=int, default=128)
    p.add_argument("--lambda", dest="lam", help="fixed threshold, or 'opt'")
    p.add_argument("--sigma-lambda", help="gaussian threshold spread, or 'opt'")
    p.add_argument("--T", type=float, default=0.8)
    p.add_argument("--gamma", type=float, default=0.8)
    p.add_argument("--delta", type=float, default=0.01)
    p.add_argument("--lambda0", type=float, default=0.5)
    p.add_argument("--probe", action="store_true", help="warm-start lambda0 from extra probe rows")
    p.add_argument("--trials", type=int, default=200)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--jobs", type=int, default=None)
    p.add_argument("--feas-tol", type=float, default=1e-8)
    p.add_argument("--opt-tol", type=float, default=1e-8)
    p.add_argument("--timing", action="store_true", help="add a wall_time column")
    p.add_argument("--no-predict", action="store_true", help="skip the replica prediction")
    p.add_argument("-o", "--output", default="-")
    p.add_argument("--summary", help="summary JSON path")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("pplus", help="P(y=+1) for a threshold, or the threshold for a target")
    _add_model(p)
    p.add_argument("--lambda", dest="lam", type=float)
    p.add_argument("--target", type=float)
    p.add_argument("-o", "--output", default="-")
    p.set_defaults(func=cmd_pplus)

    p = sub.add_parser("sweep", help="simulation sweep from a JSON config")
    p.add_argument("--config", required=True)
    p.add_argument("--trials", type=int)
    p.add_argument("--n", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--output")
    p.add_argument("--jobs", type=int, default=None)
    p.add_argument("--timing", action="store_true")
    p.set_defaults(func=cmd_sweep)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "jobs", 0) is None:
        try:
            args.jobs = default_jobs()
        except DomainError as exc:
            parser.error(str(exc))
    try:
        return args.func(args)
    except (UsageError, ConfigError, DomainError) as exc:
        parser.error(str(exc))  # exits with status 2
    return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
