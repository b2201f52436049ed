"""Four-scale discriminator ensemble.

Scale 0 sees the full-rate waveform; scales 1..3 each see one PQMF band
(bands 1..3 for M = 4). Every scale is a MelGAN-style stack::

    conv k15                      1 -> 16
    grouped conv k41 stride 4     16 -> 64 -> 256 -> 1024 (-> 1024 on scale 0)
    conv k5                       same width
    conv k3                       -> 1   (logits, no activation)

with leaky ReLU (slope 0.2) after every layer but the last. All layers use
centred zero padding, so a 16384-sample waveform and its 4096-sample bands
both end at 64 logits.
"""
from dataclasses import dataclass

import numpy as np

from .config import NUM_SCALES
from .graph import conv, leaky_relu


@dataclass
class DiscriminatorOutput:
    """Per-layer activations of one scale; ``features[-1]`` is the logit layer.

    Arrays are (F, T) or carry extra leading batch axes, (..., F, T).
    """

    features: list

    @property
    def logits(self):
        return self.features[-1]

    @property
    def num_layers(self):
        return len(self.features)


def build_discriminator(config, scale):
    """List of conv nodes for ``scale``; activations are applied by the caller."""
    if not 0 <= scale < NUM_SCALES:
        raise ValueError(f"scale must be in [0, {NUM_SCALES}), got {scale}")
    prefix = f"discriminator.{scale}"
    widths = config.stage_widths(scale)
    half = config.grouped_kernel // 2
    layers = [conv(f"{prefix}.layer0", 1, config.first_channels, config.first_kernel)]
    for j in range(1, len(widths)):
        layers.append(conv(f"{prefix}.layer{j}", widths[j - 1], widths[j], config.grouped_kernel,
                           stride=config.grouped_stride, groups=config.groups,
                           padding=(half, config.grouped_kernel - 1 - half)))
    n = len(widths)
    layers.append(conv(f"{prefix}.layer{n}", widths[-1], widths[-1], config.post_kernel))
    layers.append(conv(f"{prefix}.layer{n + 1}", widths[-1], 1, config.out_kernel))
    return layers


def discriminator_param_shapes(config, scale=None):
    scales = range(NUM_SCALES) if scale is None else [scale]
    shapes = {}
    for k in scales:
        for layer in build_discriminator(config, k):
            shapes.update(layer.params())
    return shapes


def discriminator_forward(weights, x, scale, config):
    """Run scale ``scale`` on a waveform (k = 0) or one band (k >= 1)."""
    layers = build_discriminator(config, scale)
    x = np.asarray(getattr(x, "samples", x), dtype=np.float64)
    if x.ndim == 1:
        x = x[None, :]
    if x.ndim != 2 or x.shape[0] != 1:
        raise ValueError(f"discriminator input must be (T,) or (1, T), got {x.shape}")
    shapes = {}
    for layer in layers:
        shapes.update(layer.params())
    weights.check_shapes(shapes)
    act = leaky_relu(config.leaky_slope)
    features = []
    for i, layer in enumerate(layers):
        x = layer.forward(x, weights)
        if i < len(layers) - 1:
            x = act(x)
        features.append(x)
    return DiscriminatorOutput(features)
