"""End-to-end pipeline: enhancement plus the loss breakdown on a (y, x) pair."""
import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .._validation import check_audio, check_audio_batch
from ..pqmf import analyze, design_bank
from ..signal import Signal
from .config import DiscriminatorConfig, GeneratorConfig, NUM_SCALES
from .discriminator import discriminator_forward
from .generator import generator_forward, split_bands
from .info import model_param_shapes
from .losses import (
    DEFAULT_LAMBDA,
    loss_discriminator,
    loss_generator_adv,
    loss_generator_rec,
    loss_generator_total,
)
from .weights import WeightStore, init_weights, load_weights


def discriminator_inputs(signal, bank, config):
    """Scale 0 gets the waveform, scales 1..3 the upper PQMF bands."""
    _, upper = split_bands(analyze(bank, signal), config)
    return [signal.samples] + [band for band in upper]


def discriminate(weights, signal, bank, gen_config, disc_config):
    inputs = discriminator_inputs(signal, bank, gen_config)
    return [discriminator_forward(weights, inputs[k], k, disc_config) for k in range(NUM_SCALES)]


def compute_losses(weights, reference, degraded, gen_config=None, disc_config=None, bank=None,
                   lam=DEFAULT_LAMBDA):
    """Enhance ``degraded`` and score it against ``reference``.

    Returns ``(LossBreakdown, enhanced_signal)``.
    """
    gen_config = gen_config or GeneratorConfig()
    disc_config = disc_config or DiscriminatorConfig()
    bank = bank or design_bank(gen_config.num_bands)
    if len(reference) != len(degraded):
        raise ValueError("reference and degraded lengths differ")
    enhanced = generator_forward(weights, degraded, gen_config, bank)
    real = discriminate(weights, reference, bank, gen_config, disc_config)
    fake = discriminate(weights, enhanced, bank, gen_config, disc_config)
    breakdown = loss_generator_total(loss_generator_adv(fake), loss_generator_rec(real, fake), lam,
                                     l_d=loss_discriminator(real, fake))
    return breakdown, enhanced


class EBENEnhancer(TransformerMixin, BaseEstimator):
    """Bandwidth extension as a scikit-learn transformer.

    ``fit`` builds the PQMF bank and loads (``weights`` as a path or
    :class:`WeightStore`) or seeds the parameters; nothing is trained.
    ``transform`` accepts one signal (T,) or a batch (n, T) at
    ``sample_rate_hz``; lengths are zero-padded to the model hop and trimmed
    back afterwards.
    """

    def __init__(self, num_bands=4, bands_to_generator=1, encoder_strides=(2, 4, 8),
                 base_channels=32, residual_dilations=(1, 3, 9), latent_channels=128,
                 weights=None, random_state=0, sample_rate_hz=16000):
        self.num_bands = num_bands
        self.bands_to_generator = bands_to_generator
        self.encoder_strides = encoder_strides
        self.base_channels = base_channels
        self.residual_dilations = residual_dilations
        self.latent_channels = latent_channels
        self.weights = weights
        self.random_state = random_state
        self.sample_rate_hz = sample_rate_hz

    def fit(self, X=None, y=None):
        self.config_ = GeneratorConfig(self.num_bands, self.bands_to_generator,
                                       tuple(self.encoder_strides), self.base_channels,
                                       tuple(self.residual_dilations), self.latent_channels)
        self.disc_config_ = DiscriminatorConfig()
        self.bank_ = design_bank(self.num_bands)
        if self.weights is None:
            self.weights_ = init_weights(model_param_shapes(self.config_, self.disc_config_),
                                         seed=self.random_state)
        elif isinstance(self.weights, WeightStore):
            self.weights_ = self.weights
        else:
            self.weights_ = load_weights(self.weights)
        return self

    def _enhance(self, x):
        hop = self.config_.hop
        n = x.shape[0]
        padded = np.pad(x, (0, -n % hop))
        out = generator_forward(self.weights_, Signal(padded, self.sample_rate_hz), self.config_,
                                self.bank_)
        return out.samples[:n]

    def transform(self, X):
        check_is_fitted(self, "weights_")
        X, single = check_audio_batch(X)
        out = np.stack([self._enhance(x) for x in X])
        return out[0] if single else out

    def losses(self, reference, degraded, lam=DEFAULT_LAMBDA):
        check_is_fitted(self, "weights_")
        ref, deg = check_audio(reference), check_audio(degraded)
        pad = -ref.shape[0] % self.config_.hop
        ref = Signal(np.pad(ref, (0, pad)), self.sample_rate_hz)
        deg = Signal(np.pad(deg, (0, -deg.shape[0] % self.config_.hop)), self.sample_rate_hz)
        breakdown, _ = compute_losses(self.weights_, ref, deg, self.config_, self.disc_config_,
                                      self.bank_, lam)
        return breakdown
