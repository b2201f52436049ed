"""U-Net generator wrapped between PQMF analysis and synthesis.

Layout for the default config (C = 32, strides 2/4/8), all at the subband
rate L = T / M::

    first conv        k7   bands_to_generator -> C
    enc_i  (x3)       ELU, conv k=2s stride s  C -> 2C, 3 residual units
    bottleneck        ELU, conv k7 -> latent, ELU, conv k7 -> C_last, + skip
    dec_i  (x3)       ELU, transposed conv k=2s stride s  2C -> C, + skip,
                      3 residual units
    output conv       ELU, conv k7  C -> M, tanh

A residual unit is ``x + conv1x1(ELU(conv3_dilated(ELU(x))))``.
"""
import numpy as np

from .._validation import check_audio
from ..exceptions import ConfigError
from ..pqmf import Subbands, analyze, synthesize
from .graph import Activation, Residual, Sequential, conv, conv_transpose, elu

N_SUBBAND_DISCRIMINATORS = 3


def split_bands(subbands, config):
    """Route the lowest bands to the generator and the rest to D_1..D_3.

    Returns ``(generator_input, discriminator_bands)``; discriminator bands
    are in ascending frequency order.
    """
    bands = subbands.bands if isinstance(subbands, Subbands) else np.asarray(subbands)
    if bands.shape[0] != config.num_bands:
        raise ConfigError(f"expected {config.num_bands} bands, got {bands.shape[0]}")
    n_disc = config.num_bands - config.bands_to_generator
    if n_disc != N_SUBBAND_DISCRIMINATORS:
        raise ConfigError(
            f"{n_disc} upper bands but {N_SUBBAND_DISCRIMINATORS} subband discriminators"
        )
    return bands[:config.bands_to_generator], bands[config.bands_to_generator:]


def _residual_units(prefix, channels, dilations, kernel_size=3):
    return Sequential(*[
        Residual(Sequential(
            Activation(elu),
            conv(f"{prefix}.res{j}.conv1", channels, channels, kernel_size, dilation=d),
            Activation(elu),
            conv(f"{prefix}.res{j}.conv2", channels, channels, 1),
        ))
        for j, d in enumerate(dilations)
    ])


def _level(config, depth, channels):
    k = config.kernel_size
    if depth == len(config.encoder_strides):
        return Residual(Sequential(
            Activation(elu),
            conv("generator.bottleneck.in", channels, config.latent_channels, k),
            Activation(elu),
            conv("generator.bottleneck.out", config.latent_channels, channels, k),
        ))
    s = config.encoder_strides[depth]
    wide = 2 * channels
    pad = (s // 2, s - s // 2)
    inner = Sequential(
        Activation(elu),
        conv(f"generator.enc{depth}.down", channels, wide, 2 * s, stride=s, padding=pad),
        _residual_units(f"generator.enc{depth}", wide, config.residual_dilations),
        _level(config, depth + 1, wide),
        Activation(elu),
        conv_transpose(f"generator.dec{depth}.up", wide, channels, 2 * s, s, pad),
    )
    return Sequential(
        Residual(inner),
        _residual_units(f"generator.dec{depth}", channels, config.residual_dilations),
    )


def build_generator(config):
    """Layer graph of the U-Net, subband rate in and out."""
    k = config.kernel_size
    return Sequential(
        conv("generator.first", config.bands_to_generator, config.base_channels, k),
        _level(config, 0, config.base_channels),
        Activation(elu),
        conv("generator.out", config.base_channels, config.num_bands, k),
        Activation(np.tanh),
    )


def generator_param_shapes(config):
    return dict(build_generator(config).params())


def check_generator_length(length, config):
    if length == 0 or length % config.hop:
        raise ValueError(
            f"input length {length} must be a positive multiple of {config.hop} "
            f"(M x product of encoder strides)"
        )


def generator_forward(weights, degraded, config, bank):
    """Enhance ``degraded``: analyze, run the U-Net on the low band(s), synthesize."""
    x = check_audio(degraded)
    check_generator_length(x.shape[0], config)
    if bank.num_bands != config.num_bands:
        raise ConfigError(f"bank has {bank.num_bands} bands, config expects {config.num_bands}")
    weights.check_shapes(generator_param_shapes(config))
    gen_in, _ = split_bands(analyze(bank, degraded), config)
    bands = build_generator(config).forward(gen_in, weights)
    return synthesize(bank, Subbands(bands, degraded.sample_rate_hz, x.shape[0]))
