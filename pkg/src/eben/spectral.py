"""Welch cross-spectra, H1 transfer function, coherence and spectrograms."""
from dataclasses import dataclass

import numpy as np
from scipy.signal import get_window
from sklearn.base import BaseEstimator

from ._validation import check_audio, check_same_length, is_power_of_two
from .exceptions import DegenerateInputError
from .signal import rfft

MASK_RELATIVE = 1e-12


@dataclass(frozen=True)
class WelchConfig:
    segment_len: int = 1024
    overlap: float = 0.5
    window: str = "hann"

    def __post_init__(self):
        if not is_power_of_two(self.segment_len):
            raise ValueError(f"segment_len must be a power of two, got {self.segment_len}")
        if not 0.0 <= self.overlap < 1.0:
            raise ValueError(f"overlap must be in [0, 1), got {self.overlap}")

    @property
    def hop(self):
        return max(1, int(round(self.segment_len * (1.0 - self.overlap))))

    def n_segments(self, length):
        if length < self.segment_len:
            return 0
        return (length - self.segment_len) // self.hop + 1


@dataclass(frozen=True)
class SpectralEstimate:
    """One-sided auto- and cross-spectral densities (units^2/Hz)."""

    frequencies_hz: np.ndarray
    pxx: np.ndarray
    pyy: np.ndarray
    pxy: np.ndarray
    n_segments: int


def _segments(x, config):
    n_seg = config.n_segments(x.shape[0])
    idx = np.arange(config.segment_len)[None, :] + config.hop * np.arange(n_seg)[:, None]
    return x[idx]


def welch_cross(x, y, config=None):
    """Averaged periodogram estimate of Pxx, Pyy and Pxy = E[conj(X) Y]."""
    config = config or WelchConfig()
    xs = check_audio(x, "x")
    ys = check_audio(y, "y")
    check_same_length(xs, ys, ("x", "y"))
    if x.sample_rate_hz != y.sample_rate_hz:
        raise ValueError("x and y sample rates differ")
    n_seg = config.n_segments(xs.shape[0])
    if n_seg < 2:
        raise ValueError(f"need at least 2 segments of {config.segment_len} samples, got {n_seg}")

    fs = x.sample_rate_hz
    nfft = config.segment_len
    window = get_window(config.window, nfft)
    X = rfft(_segments(xs, config) * window, nfft)
    Y = rfft(_segments(ys, config) * window, nfft)

    scale = np.full(nfft // 2 + 1, 2.0 / (fs * np.sum(window ** 2)))
    scale[0] /= 2.0
    scale[-1] /= 2.0
    pxx = np.mean(np.abs(X) ** 2, axis=0) * scale
    pyy = np.mean(np.abs(Y) ** 2, axis=0) * scale
    pxy = np.mean(np.conj(X) * Y, axis=0) * scale
    freqs = np.arange(nfft // 2 + 1) * fs / nfft
    return SpectralEstimate(freqs, pxx, pyy, pxy, n_seg)


def _mask(power):
    return power >= MASK_RELATIVE * np.max(power)


def transfer_function(estimate):
    """H1 estimator ``Pxy / Pxx``; masked bins (negligible Pxx) are NaN."""
    valid = _mask(estimate.pxx) & (estimate.pxx > 0)
    if not np.any(valid):
        raise DegenerateInputError("input spectrum is zero at every bin")
    out = np.full(estimate.pxy.shape, np.nan + 0j)
    out[valid] = estimate.pxy[valid] / estimate.pxx[valid]
    return out


def coherence_unclamped(estimate):
    valid = _mask(estimate.pxx) & _mask(estimate.pyy) & (estimate.pxx > 0) & (estimate.pyy > 0)
    if not np.any(valid):
        raise DegenerateInputError("no bin carries energy in both signals")
    out = np.full(estimate.pxx.shape, np.nan)
    out[valid] = np.abs(estimate.pxy[valid]) ** 2 / (estimate.pxx[valid] * estimate.pyy[valid])
    return out


def coherence(estimate):
    """Magnitude-squared coherence in [0, 1]; masked bins are NaN."""
    return np.clip(coherence_unclamped(estimate), 0.0, 1.0)


def spectrogram(signal, frame=512, hop=128, floor_db=-80.0):
    """Hann STFT magnitude in dB re. a full-scale sinusoid, clipped at ``floor_db``.

    Returns ``(times_s, freqs_hz, S_db)`` with ``S_db`` shaped
    (n_frames, frame // 2 + 1), ``n_frames = (T - frame) // hop + 1``.
    """
    x = check_audio(signal, allow_empty=True)
    if x.shape[0] < frame:
        raise ValueError(f"signal of {x.shape[0]} samples shorter than one frame ({frame})")
    fs = signal.sample_rate_hz
    n_frames = (x.shape[0] - frame) // hop + 1
    idx = np.arange(frame)[None, :] + hop * np.arange(n_frames)[:, None]
    window = get_window("hann", frame)
    mag = 2.0 * np.abs(rfft(x[idx] * window, frame)) / np.sum(window)
    with np.errstate(divide="ignore"):
        db = 20.0 * np.log10(mag)
    db = np.maximum(db, floor_db)
    times = (np.arange(n_frames) * hop + frame / 2) / fs
    freqs = np.arange(frame // 2 + 1) * fs / frame
    return times, freqs, db


class DegradationAnalyzer(BaseEstimator):
    """Estimate how a capture device degrades speech.

    ``fit(X, y)`` takes simultaneous recordings: ``X`` from the reference
    microphone and ``y`` from the device, both :class:`~eben.signal.Signal`.
    Sets ``frequencies_``, ``transfer_function_``, ``coherence_`` and
    ``estimate_``.
    """

    def __init__(self, segment_len=1024, overlap=0.5, window="hann"):
        self.segment_len = segment_len
        self.overlap = overlap
        self.window = window

    def fit(self, X, y):
        est = welch_cross(X, y, WelchConfig(self.segment_len, self.overlap, self.window))
        self.estimate_ = est
        self.frequencies_ = est.frequencies_hz
        self.transfer_function_ = transfer_function(est)
        self.coherence_ = coherence(est)
        return self

    def gain_db(self):
        with np.errstate(divide="ignore"):
            return 20.0 * np.log10(np.abs(self.transfer_function_))
