"""JSON sweep configuration."""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from ..errors import DomainError
from ..model import SignalModel
from .io import _atomic_write


class ConfigError(DomainError):
    pass


DEFAULT_TOLERANCES = {"feas_tol": 1e-8, "opt_tol": 1e-8, "saddle_tol": 1e-10}
_STRATEGY_KEYS = {
    "fixed": {"family", "params"},
    "gaussian": {"family", "params"},
    "adaptive": {"family", "T", "gamma", "delta", "lambda0", "probe"},
}


@dataclass
class SweepConfig:
    model: SignalModel
    alphas: list
    strategy: dict
    n: int = 128
    trials: int = 200
    master_seed: int = 0
    tolerances: dict = field(default_factory=lambda: dict(DEFAULT_TOLERANCES))
    output: str = "sweep.csv"

    def __post_init__(self):
        if self.trials < 1:
            raise ConfigError("trials must be >= 1")
        if self.n < 8:
            raise ConfigError("n must be >= 8")
        if not self.alphas or any(not a > 0 for a in self.alphas):
            raise ConfigError("alphas must be a non-empty list of positive numbers")
        validate_strategy(self.strategy)
        unknown = set(self.tolerances) - set(DEFAULT_TOLERANCES)
        if unknown:
            raise ConfigError(f"unknown tolerance key {sorted(unknown)[0]!r}")

    def to_dict(self) -> dict:
        return {
            "model": {"rho": self.model.rho, "sigma0_sq": self.model.sigma0_sq},
            "alphas": list(self.alphas),
            "strategy": dict(self.strategy),
            "n": self.n,
            "trials": self.trials,
            "master_seed": self.master_seed,
            "tolerances": dict(self.tolerances),
            "output": self.output,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> SweepConfig:
        known = {"model", "alphas", "strategy", "n", "trials", "master_seed", "tolerances", "output"}
        for key in doc:
            if key not in known:
                raise ConfigError(f"unknown config key {key!r}")
        for key in ("model", "alphas", "strategy"):
            if key not in doc:
                raise ConfigError(f"missing config key {key!r}")
        model_doc = doc["model"]
        for key in model_doc:
            if key not in ("rho", "sigma0_sq"):
                raise ConfigError(f"unknown config key 'model.{key}'")
        kwargs = {k: doc[k] for k in ("n", "trials", "master_seed", "output") if k in doc}
        tolerances = dict(DEFAULT_TOLERANCES)
        tolerances.update(doc.get("tolerances", {}))
        return cls(
            model=SignalModel(float(model_doc["rho"]), float(model_doc["sigma0_sq"])),
            alphas=[float(a) for a in doc["alphas"]],
            strategy=dict(doc["strategy"]),
            tolerances=tolerances,
            **kwargs,
        )


def validate_strategy(spec: dict) -> None:
    family = spec.get("family")
    if family not in _STRATEGY_KEYS:
        raise ConfigError(f"strategy.family must be one of {sorted(_STRATEGY_KEYS)}, got {family!r}")
    for key in spec:
        if key not in _STRATEGY_KEYS[family]:
            raise ConfigError(f"unknown config key 'strategy.{key}'")
    if family in ("fixed", "gaussian"):
        params = spec.get("params")
        if params != "envelope" and (not isinstance(params, list) or not params):
            raise ConfigError("strategy.params must be a non-empty list or \"envelope\"")


def load_config(path) -> SweepConfig:
    with open(path, encoding="utf-8") as fh:
        return SweepConfig.from_dict(json.load(fh))


def save_config(config: SweepConfig, path) -> None:
    _atomic_write(json.dumps(config.to_dict(), indent=2) + "\n", path)
