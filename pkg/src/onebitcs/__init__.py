"""Thresholded 1-bit compressed sensing: simulation, l1 reconstruction, replica predictions."""

from .adaptive import AdaptiveParams, run_adaptive
from .model import Adaptive, Fixed, GaussianRandom, Instance, SignalModel, make_instance
from .recon import check_certificate, reconstruct
from .replica import envelope, lambda_for_p, p_plus, solve_saddle

__version__ = "0.1.0"

__all__ = [
    "Adaptive", "AdaptiveParams", "Fixed", "GaussianRandom", "Instance", "SignalModel",
    "check_certificate", "envelope", "lambda_for_p", "make_instance", "p_plus", "reconstruct",
    "run_adaptive", "solve_saddle",
]
