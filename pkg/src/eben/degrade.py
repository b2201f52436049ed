"""Simulated in-ear capture: zero-phase 2nd-order lowpass plus white noise."""
import math
from dataclasses import dataclass

import numpy as np
from scipy.signal import lfilter
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from ._random import MASK64, standard_normal
from ._validation import check_audio, check_audio_batch, check_sample_rate
from .signal import Signal

FILTFILT_PADLEN = 9
NOISE_REFERENCES = ("filtered", "clean")


@dataclass(frozen=True)
class Biquad:
    """Second-order section with ``a0`` normalized to 1."""

    b0: float
    b1: float
    b2: float
    a1: float
    a2: float

    @property
    def b(self):
        return np.array([self.b0, self.b1, self.b2])

    @property
    def a(self):
        return np.array([1.0, self.a1, self.a2])

    def poles(self):
        return np.roots(self.a)

    def is_stable(self):
        return bool(np.all(np.abs(self.poles()) < 1.0))

    def response(self, freqs_hz, sample_rate_hz):
        """Complex frequency response at ``freqs_hz``."""
        z1 = np.exp(-2j * np.pi * np.asarray(freqs_hz, dtype=np.float64) / sample_rate_hz)
        return (self.b0 + self.b1 * z1 + self.b2 * z1 ** 2) / (1.0 + self.a1 * z1 + self.a2 * z1 ** 2)

    def steady_state(self):
        """Transposed direct-form II state for a unit step at equilibrium."""
        gain = (self.b0 + self.b1 + self.b2) / (1.0 + self.a1 + self.a2)
        z2 = self.b2 - self.a2 * gain
        z1 = self.b1 - self.a1 * gain + z2
        return np.array([z1, z2])


@dataclass(frozen=True)
class DegradationConfig:
    cutoff_hz: float = 600.0
    q_factor: float = 1.0
    noise_snr_db: float = 23.0
    seed: int = 0
    # "filtered": noise power relative to the lowpassed signal; "clean": to the input
    noise_reference: str = "filtered"

    def __post_init__(self):
        if not self.cutoff_hz > 0:
            raise ValueError("cutoff_hz must be positive")
        if not self.q_factor > 0:
            raise ValueError("q_factor must be positive")
        if not math.isfinite(self.noise_snr_db):
            raise ValueError("noise_snr_db must be finite")
        if not 0 <= int(self.seed) <= MASK64:
            raise ValueError("seed must be an unsigned 64-bit integer")
        if self.noise_reference not in NOISE_REFERENCES:
            raise ValueError(f"noise_reference must be one of {NOISE_REFERENCES}")


def design_lowpass_biquad(cutoff_hz, q_factor, sample_rate_hz):
    """Bilinear-transform (RBJ cookbook) lowpass with unit DC gain."""
    check_sample_rate(sample_rate_hz)
    if not 0 < cutoff_hz < sample_rate_hz / 2:
        raise ValueError(f"cutoff_hz must lie in (0, {sample_rate_hz / 2}), got {cutoff_hz}")
    if not q_factor > 0:
        raise ValueError("q_factor must be positive")
    w0 = 2.0 * math.pi * cutoff_hz / sample_rate_hz
    cos_w0 = math.cos(w0)
    alpha = math.sin(w0) / (2.0 * q_factor)
    a0 = 1.0 + alpha
    b_edge = (1.0 - cos_w0) / 2.0 / a0
    return Biquad(b_edge, (1.0 - cos_w0) / a0, b_edge, -2.0 * cos_w0 / a0, (1.0 - alpha) / a0)


def _filtfilt_array(biquad, x):
    n = FILTFILT_PADLEN
    if x.shape[0] <= 3 * n:
        raise ValueError(f"filtfilt needs more than {3 * n} samples, got {x.shape[0]}")
    # odd reflection about the end samples
    left = 2.0 * x[0] - x[n:0:-1]
    right = 2.0 * x[-1] - x[-2:-n - 2:-1]
    ext = np.concatenate([left, x, right])
    b, a, zi = biquad.b, biquad.a, biquad.steady_state()
    y, _ = lfilter(b, a, ext, zi=zi * ext[0])
    y = y[::-1]
    y, _ = lfilter(b, a, y, zi=zi * y[0])
    return y[::-1][n:-n]


def filtfilt(biquad, signal):
    """Forward-backward filtering: magnitude |H|^2, zero phase.

    Edges use odd reflection over 9 samples and steady-state initial
    conditions, the behaviour users of ``filtfilt`` in MATLAB and SciPy expect.
    """
    x = check_audio(signal)
    return signal.replace(_filtfilt_array(biquad, x))


def _noise_variance(reference, snr_db):
    power = float(np.mean(reference ** 2))
    return power * 10.0 ** (-snr_db / 10.0)


def degrade_components(signal, config=None):
    """Return ``(filtered, noise)`` arrays whose sum is the degraded signal."""
    config = config or DegradationConfig()
    x = check_audio(signal)
    biquad = design_lowpass_biquad(config.cutoff_hz, config.q_factor, signal.sample_rate_hz)
    filtered = _filtfilt_array(biquad, x)
    reference = filtered if config.noise_reference == "filtered" else x
    sigma = math.sqrt(_noise_variance(reference, config.noise_snr_db))
    noise = sigma * standard_normal(int(config.seed), x.shape[0])
    return filtered, noise


def degrade(signal, config=None):
    """Lowpass ``signal`` with zero phase and add seeded Gaussian noise."""
    filtered, noise = degrade_components(signal, config)
    return signal.replace(filtered + noise)


def measured_snr_db(filtered, noise):
    """Power ratio of the filtered component to the added noise, in dB."""
    p_noise = float(np.mean(np.asarray(noise) ** 2))
    if p_noise == 0:
        return math.inf
    return 10.0 * math.log10(float(np.mean(np.asarray(filtered) ** 2)) / p_noise)


def degradation_response(config=None, sample_rate_hz=16000, n_points=512):
    """Composite (forward-backward) magnitude response in dB.

    Returns ``(freqs_hz, response_db)`` with ``n_points`` frequencies evenly
    spaced on ``[0, fs/2]``.
    """
    config = config or DegradationConfig()
    biquad = design_lowpass_biquad(config.cutoff_hz, config.q_factor, sample_rate_hz)
    freqs = np.linspace(0.0, sample_rate_hz / 2.0, n_points)
    power = np.abs(biquad.response(freqs, sample_rate_hz)) ** 2
    with np.errstate(divide="ignore"):
        return freqs, 20.0 * np.log10(np.maximum(power, 1e-300))


class InEarDegrader(TransformerMixin, BaseEstimator):
    """Transformer applying :func:`degrade` to one signal or a batch.

    Row ``i`` of a batch uses noise seed ``seed + i`` (mod 2**64) so rows get
    independent noise while the whole batch stays reproducible.
    """

    def __init__(self, cutoff_hz=600.0, q_factor=1.0, noise_snr_db=23.0, seed=0,
                 noise_reference="filtered", sample_rate_hz=16000):
        self.cutoff_hz = cutoff_hz
        self.q_factor = q_factor
        self.noise_snr_db = noise_snr_db
        self.seed = seed
        self.noise_reference = noise_reference
        self.sample_rate_hz = sample_rate_hz

    def _config(self, row=0):
        return DegradationConfig(self.cutoff_hz, self.q_factor, self.noise_snr_db,
                                 (int(self.seed) + row) & MASK64, self.noise_reference)

    def fit(self, X=None, y=None):
        self._config()
        self.biquad_ = design_lowpass_biquad(self.cutoff_hz, self.q_factor, self.sample_rate_hz)
        return self

    def transform(self, X):
        check_is_fitted(self, "biquad_")
        X, single = check_audio_batch(X)
        out = np.stack([
            degrade(Signal(x, self.sample_rate_hz), self._config(i)).samples
            for i, x in enumerate(X)
        ])
        return out[0] if single else out
