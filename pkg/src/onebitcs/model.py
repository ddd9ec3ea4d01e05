"""Problem instances: sparse signals, Gaussian sensing matrices, thresholds, 1-bit measurement."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Union

import numpy as np

from .errors import ContractError, DomainError

if TYPE_CHECKING:
    from .adaptive import AdaptiveParams

_SEED_MASK = (1 << 64) - 1

# sub-stream keys under an instance seed
SIGNAL_STREAM = 0
MATRIX_STREAM = 1
THRESHOLD_STREAM = 2


@dataclass(frozen=True)
class SignalModel:
    """Bernoulli-Gaussian prior: 0 w.p. 1-rho, else N(0, sigma0_sq)."""

    rho: float
    sigma0_sq: float

    def __post_init__(self):
        if not (0.0 < self.rho <= 1.0):
            raise DomainError(f"rho must lie in (0, 1], got {self.rho!r}")
        if not (self.sigma0_sq > 0.0 and math.isfinite(self.sigma0_sq)):
            raise DomainError(f"sigma0_sq must be positive and finite, got {self.sigma0_sq!r}")

    @property
    def power(self) -> float:
        """Per-component signal power rho * sigma0_sq."""
        return self.rho * self.sigma0_sq


@dataclass(frozen=True)
class Fixed:
    lam: float

    kind = "fixed"

    def to_dict(self):
        return {"kind": self.kind, "lambda": self.lam}


@dataclass(frozen=True)
class GaussianRandom:
    sigma_lambda: float

    kind = "gaussian"

    def __post_init__(self):
        if not self.sigma_lambda >= 0.0:
            raise DomainError(f"sigma_lambda must be >= 0, got {self.sigma_lambda!r}")

    def to_dict(self):
        return {"kind": self.kind, "sigma_lambda": self.sigma_lambda}


@dataclass(frozen=True)
class Adaptive:
    params: AdaptiveParams

    kind = "adaptive"

    def to_dict(self):
        p = self.params
        return {"kind": self.kind, "T": p.target_T, "gamma": p.gamma,
                "delta": p.delta, "lambda0": p.lambda0}


ThresholdStrategy = Union[Fixed, GaussianRandom, Adaptive]


def strategy_from_dict(d: dict) -> ThresholdStrategy:
    kind = d.get("kind")
    if kind == "fixed":
        return Fixed(float(d["lambda"]))
    if kind == "gaussian":
        return GaussianRandom(float(d["sigma_lambda"]))
    if kind == "adaptive":
        from .adaptive import AdaptiveParams

        return Adaptive(AdaptiveParams(target_T=float(d["T"]), gamma=float(d["gamma"]),
                                       delta=float(d["delta"]), lambda0=float(d["lambda0"])))
    raise DomainError(f"unknown strategy kind {kind!r}")


def derive_seed(master: int, *keys: int) -> int:
    """Order-independent 64-bit child seed for (master, *keys)."""
    ss = np.random.SeedSequence([int(master) & _SEED_MASK, *(int(k) & _SEED_MASK for k in keys)])
    lo, hi = ss.generate_state(2, dtype=np.uint32)
    return int(lo) | (int(hi) << 32)


def make_rng(seed: int) -> np.random.Generator:
    """Counter-based generator for a 64-bit seed."""
    return np.random.Generator(np.random.Philox(int(seed) & _SEED_MASK))


def sample_signal(n: int, model: SignalModel, seed: int) -> np.ndarray:
    if n < 1:
        raise DomainError("n must be >= 1")
    if not isinstance(model, SignalModel):
        raise DomainError("model must be a SignalModel")
    rng = make_rng(seed)
    support = rng.random(n) < model.rho
    values = rng.normal(0.0, math.sqrt(model.sigma0_sq), n)
    return np.where(support, values, 0.0)


def sample_matrix(m: int, n: int, seed: int) -> np.ndarray:
    """M x N matrix with i.i.d. N(0, 1/N) entries."""
    if m < 1 or n < 1:
        raise DomainError("matrix dimensions must be >= 1")
    rng = make_rng(seed)
    return rng.normal(0.0, 1.0 / math.sqrt(n), (m, n))


def sample_thresholds(strategy: ThresholdStrategy, m: int, seed: int) -> np.ndarray:
    if m < 1:
        raise DomainError("m must be >= 1")
    if isinstance(strategy, Fixed):
        return np.full(m, float(strategy.lam))
    if isinstance(strategy, GaussianRandom):
        if strategy.sigma_lambda == 0.0:
            return np.zeros(m)
        return make_rng(seed).normal(0.0, strategy.sigma_lambda, m)
    if isinstance(strategy, Adaptive):
        raise ContractError("adaptive thresholds are produced online; use onebitcs.adaptive.run_adaptive")
    raise ContractError(f"unsupported strategy {strategy!r}")


def measure(phi, x0, lambda_vec) -> np.ndarray:
    """y = sign(phi @ x0 + lambda_vec) with sign(0) = +1, as int8."""
    phi = np.atleast_2d(np.asarray(phi, dtype=float))
    x0 = np.asarray(x0, dtype=float)
    lambda_vec = np.asarray(lambda_vec, dtype=float)
    if phi.shape[1] != x0.shape[0] or phi.shape[0] != lambda_vec.shape[0]:
        raise DomainError(
            f"dimension mismatch: phi {phi.shape}, x0 {x0.shape}, lambda {lambda_vec.shape}")
    return np.where(phi @ x0 + lambda_vec >= 0.0, 1, -1).astype(np.int8)


def empirical_mse(x_hat, x0) -> float:
    x_hat = np.asarray(x_hat, dtype=float)
    x0 = np.asarray(x0, dtype=float)
    if x_hat.shape != x0.shape:
        raise DomainError("x_hat and x0 must have the same shape")
    return float(np.mean((x_hat - x0) ** 2))


def to_db(value: float) -> float:
    """10 log10(value); -inf for 0."""
    if value < 0:
        raise DomainError("dB conversion needs a non-negative value")
    return -math.inf if value == 0 else 10.0 * math.log10(value)


def directional_mse(x_hat, x0) -> float:
    x_hat = np.asarray(x_hat, dtype=float)
    x0 = np.asarray(x0, dtype=float)
    n1 = np.linalg.norm(x_hat)
    n0 = np.linalg.norm(x0)
    if n1 == 0 or n0 == 0:
        raise DomainError("directional MSE is undefined for a zero vector")
    return float(np.sum((x_hat / n1 - x0 / n0) ** 2))


@dataclass(frozen=True, eq=False)
class Instance:
    """One realised problem. ``y`` always equals ``measure(phi, x0, lambda_vec)``."""

    phi: np.ndarray
    x0: np.ndarray
    lambda_vec: np.ndarray
    y: np.ndarray
    seed: int
    model: SignalModel | None = None
    strategy: ThresholdStrategy | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        m, n = self.phi.shape
        if self.x0.shape != (n,) or self.lambda_vec.shape != (m,) or self.y.shape != (m,):
            raise DomainError("instance dimensions are inconsistent")
        for arr in (self.phi, self.x0, self.lambda_vec, self.y):
            arr.setflags(write=False)

    @property
    def n(self) -> int:
        return self.phi.shape[1]

    @property
    def m(self) -> int:
        return self.phi.shape[0]

    @property
    def alpha(self) -> float:
        return self.m / self.n

    def to_dict(self, include_phi: bool = False, include_x0: bool = True) -> dict:
        doc = {
            "n": self.n,
            "m": self.m,
            "seed": self.seed,
            "rho": self.model.rho if self.model else None,
            "sigma0_sq": self.model.sigma0_sq if self.model else None,
            "strategy": self.strategy.to_dict() if self.strategy else None,
            "lambda_vec": self.lambda_vec.tolist(),
            "y": self.y.astype(int).tolist(),
        }
        if include_x0:
            doc["x0"] = self.x0.tolist()
        if include_phi:
            doc["phi"] = self.phi.tolist()
        return doc

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(**kw))

    @classmethod
    def from_dict(cls, doc: dict) -> Instance:
        n, m, seed = int(doc["n"]), int(doc["m"]), int(doc["seed"])
        model = None
        if doc.get("rho") is not None:
            model = SignalModel(float(doc["rho"]), float(doc["sigma0_sq"]))
        strategy = strategy_from_dict(doc["strategy"]) if doc.get("strategy") else None
        if doc.get("phi") is not None:
            phi = np.asarray(doc["phi"], dtype=float)
        else:
            phi = sample_matrix(m, n, derive_seed(seed, MATRIX_STREAM))
        if doc.get("x0") is not None:
            x0 = np.asarray(doc["x0"], dtype=float)
        elif model is not None:
            x0 = sample_signal(n, model, derive_seed(seed, SIGNAL_STREAM))
        else:
            raise DomainError("x0 absent and no model to regenerate it from")
        return cls(phi=phi, x0=x0, lambda_vec=np.asarray(doc["lambda_vec"], dtype=float),
                   y=np.asarray(doc["y"], dtype=np.int8), seed=seed, model=model, strategy=strategy)

    @classmethod
    def from_json(cls, text: str) -> Instance:
        return cls.from_dict(json.loads(text))


def make_instance(n: int, m: int, model: SignalModel, strategy: ThresholdStrategy, seed: int) -> Instance:
    """Sample signal, matrix and thresholds from sub-streams of ``seed`` and measure."""
    x0 = sample_signal(n, model, derive_seed(seed, SIGNAL_STREAM))
    matrix_seed = derive_seed(seed, MATRIX_STREAM)
    if isinstance(strategy, Adaptive):
        from .adaptive import run_adaptive

        y, lam, phi = run_adaptive(x0, m, strategy.params, matrix_seed)
    else:
        phi = sample_matrix(m, n, matrix_seed)
        lam = sample_thresholds(strategy, m, derive_seed(seed, THRESHOLD_STREAM))
        y = measure(phi, x0, lam)
    return Instance(phi=phi, x0=x0, lambda_vec=lam, y=y, seed=int(seed), model=model, strategy=strategy)
