"""Mesh-free all-time-marginal optimal transport solver and experiment harness."""

__version__ = "0.1.0"

from .errors import ConfigError, NonFiniteLossError
from .flows import MarginalFlow, make_flow
from .kernels import (
    PhiLadder,
    RadialKernel,
    apply_generator,
    apply_generator_twice,
    apply_generator_twice_gaussian,
    phi_ladder,
)
from .estimator import (
    LossConfig,
    SampleBatch,
    bias_probe,
    draw_batch,
    ensemble_loss,
    kinetic_energy,
    loss_and_gradient,
    loss_gradient,
    residual_penalty,
    total_loss,
)
from .models import FeatureDictionary, MlpDrift, constant_drift, make_model

__all__ = [
    "ConfigError",
    "NonFiniteLossError",
    "MarginalFlow",
    "make_flow",
    "PhiLadder",
    "RadialKernel",
    "apply_generator",
    "apply_generator_twice",
    "apply_generator_twice_gaussian",
    "phi_ladder",
    "LossConfig",
    "SampleBatch",
    "bias_probe",
    "draw_batch",
    "ensemble_loss",
    "kinetic_energy",
    "loss_and_gradient",
    "loss_gradient",
    "residual_penalty",
    "total_loss",
    "FeatureDictionary",
    "MlpDrift",
    "constant_drift",
    "make_model",
]
