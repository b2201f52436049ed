"""EBEN generator, discriminator ensemble, losses and weight files."""
from .config import DiscriminatorConfig, GeneratorConfig, load_config
from .discriminator import DiscriminatorOutput, discriminator_forward
from .estimator import EBENEnhancer, compute_losses
from .generator import generator_forward, split_bands
from .info import count_parameters, model_param_shapes, report_latency
from .losses import (
    LossBreakdown,
    loss_discriminator,
    loss_generator_adv,
    loss_generator_rec,
    loss_generator_total,
)
from .weights import WeightStore, init_weights, load_weights, save_weights, zero_weights

__all__ = [
    "DiscriminatorConfig", "DiscriminatorOutput", "EBENEnhancer", "compute_losses", "GeneratorConfig", "LossBreakdown",
    "WeightStore", "count_parameters", "discriminator_forward", "generator_forward",
    "init_weights", "load_config", "load_weights", "loss_discriminator",
    "loss_generator_adv", "loss_generator_rec", "loss_generator_total",
    "model_param_shapes", "report_latency", "save_weights", "split_bands", "zero_weights",
]
