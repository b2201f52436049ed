"""Pseudo-QMF filter banks: design, decimated analysis and synthesis.

Bands are 0-indexed: band ``i`` covers normalized frequencies
``[i / (2M), (i + 1) / (2M)]`` (1.0 = sample rate).

Analysis filters ``H_i`` and synthesis filters ``G_i`` are the usual
cosine-modulated copies of one linear-phase lowpass prototype ``p``::

    H_i[n] = 2 p[n] cos((2i+1) pi/(2M) (n - m) + phi_i)
    G_i[n] = 2 p[n] cos((2i+1) pi/(2M) (n - m) - phi_i)
    m = (N-1)/2,   phi_i = (-1)^i pi/4

Both are meant as convolution kernels. Since :func:`~eben.signal.conv1d`
cross-correlates, analysis runs it with the time-reversed ``H_i``; synthesis
is a transposed convolution (a true convolution) with ``G_i``.
"""
import json
import math
from dataclasses import dataclass

import numpy as np
from scipy.signal import kaiser_beta
from scipy.signal.windows import kaiser
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from ._validation import check_audio, check_audio_batch, check_positive_int
from .exceptions import DesignError, ShapeError
from .signal import ConvSpec, Signal, conv1d, conv1d_transposed

GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0
MIN_CERTIFIED_SNR_DB = 20.0
CERTIFY_LENGTH = 2 ** 14
CERTIFY_SEED = 0


def snr_db(reference, estimate):
    """Plain SNR of ``estimate`` against ``reference`` in dB."""
    err = np.sum((estimate - reference) ** 2)
    if err == 0:
        return math.inf
    return 10.0 * math.log10(np.sum(reference ** 2) / err)


def kaiser_prototype(taps, cutoff, attenuation_db):
    """Kaiser-windowed ideal lowpass; ``cutoff`` in cycles/sample."""
    n = np.arange(taps) - (taps - 1) / 2.0
    beta = kaiser_beta(attenuation_db)
    proto = 2.0 * cutoff * np.sinc(2.0 * cutoff * n) * kaiser(taps, beta, sym=True)
    # enforce exact linear phase
    return 0.5 * (proto + proto[::-1])


def modulate(prototype, num_bands):
    """Return the (analysis, synthesis) kernel matrices, each (M, N)."""
    taps = prototype.shape[0]
    n = np.arange(taps) - (taps - 1) / 2.0
    analysis = np.empty((num_bands, taps))
    synthesis = np.empty((num_bands, taps))
    for i in range(num_bands):
        arg = (2 * i + 1) * (np.pi / (2 * num_bands)) * n
        phase = (-1) ** i * np.pi / 4
        analysis[i] = 2.0 * prototype * np.cos(arg + phase)
        synthesis[i] = 2.0 * prototype * np.cos(arg - phase)
    return analysis, synthesis


def _padding(num_bands, taps):
    left = (taps - num_bands) // 2
    return left, taps - num_bands - left


def _analyze_array(x, analysis, num_bands):
    taps = analysis.shape[1]
    spec = ConvSpec(1, num_bands, taps, stride=num_bands, padding=_padding(num_bands, taps))
    return conv1d(x[None, :], analysis[:, None, ::-1], None, spec)


def _synthesize_array(bands, synthesis, num_bands):
    taps = synthesis.shape[1]
    spec = ConvSpec(num_bands, 1, taps, stride=num_bands, padding=_padding(num_bands, taps))
    return num_bands * conv1d_transposed(bands, synthesis[:, None, :], None, spec)[0]


def _roundtrip_error(prototype, num_bands):
    """Squared error of the round trip for impulses at every polyphase phase."""
    analysis, synthesis = modulate(prototype, num_bands)
    taps = prototype.shape[0]
    length = num_bands * (4 * taps // num_bands + 4)
    centre = length // 2 - length // 2 % num_bands
    err = 0.0
    for phase in range(num_bands):
        x = np.zeros(length)
        x[centre + phase] = 1.0
        y = _synthesize_array(_analyze_array(x, analysis, num_bands), synthesis, num_bands)
        err += float(np.sum((y - x) ** 2))
    return err


def golden_section(func, lo, hi, max_iter=200, tol=1e-7):
    """Minimize a unimodal scalar function on ``[lo, hi]``."""
    a, b = lo, hi
    c = b - GOLDEN * (b - a)
    d = a + GOLDEN * (b - a)
    fc, fd = func(c), func(d)
    for _ in range(max_iter):
        if b - a <= tol:
            break
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - GOLDEN * (b - a)
            fc = func(c)
        else:
            a, c, fc = c, d, fd
            d = a + GOLDEN * (b - a)
            fd = func(d)
    return c if fc <= fd else d


@dataclass(frozen=True)
class PqmfBank:
    """Immutable M-band PQMF bank.

    Kernels are derived from ``prototype``; ``certified_snr_db`` is the
    white-noise round-trip SNR measured when the bank was built.
    """

    num_bands: int
    taps: int
    cutoff: float
    attenuation_db: float
    prototype: np.ndarray
    analysis_kernels: np.ndarray
    synthesis_kernels: np.ndarray
    certified_snr_db: float

    @property
    def padding(self):
        return _padding(self.num_bands, self.taps)

    @classmethod
    def from_prototype(cls, num_bands, prototype, cutoff, attenuation_db, certified_snr_db=None):
        prototype = np.asarray(prototype, dtype=np.float64).copy()
        analysis, synthesis = modulate(prototype, num_bands)
        for arr in (prototype, analysis, synthesis):
            arr.flags.writeable = False
        bank = cls(num_bands, prototype.shape[0], float(cutoff), float(attenuation_db),
                   prototype, analysis, synthesis, math.nan)
        if certified_snr_db is None:
            certified_snr_db = measure_roundtrip_snr(bank)
        object.__setattr__(bank, "certified_snr_db", float(certified_snr_db))
        return bank

    def to_dict(self):
        return {
            "M": self.num_bands,
            "taps": self.taps,
            "cutoff": self.cutoff,
            "attenuation_db": self.attenuation_db,
            "certified_snr_db": self.certified_snr_db,
            "prototype": self.prototype.tolist(),
        }

    @classmethod
    def from_dict(cls, doc):
        proto = np.asarray(doc["prototype"], dtype=np.float64)
        if proto.shape != (int(doc["taps"]),):
            raise ShapeError(f"prototype has {proto.size} taps, header says {doc['taps']}")
        return cls.from_prototype(int(doc["M"]), proto, doc["cutoff"], doc["attenuation_db"],
                                  doc.get("certified_snr_db"))

    def to_json(self, path):
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=2)

    @classmethod
    def from_json(cls, path):
        with open(path) as fh:
            return cls.from_dict(json.load(fh))


def measure_roundtrip_snr(bank, length=CERTIFY_LENGTH, seed=CERTIFY_SEED):
    """Round-trip SNR on seeded white noise, excluding ``taps`` edge samples."""
    length -= length % bank.num_bands
    x = np.random.default_rng(seed).standard_normal(length)
    y = _synthesize_array(_analyze_array(x, bank.analysis_kernels, bank.num_bands),
                          bank.synthesis_kernels, bank.num_bands)
    edge = bank.taps
    return snr_db(x[edge:-edge], y[edge:-edge])


def design_bank(num_bands, taps=None, attenuation_db=100.0):
    """Design a near-perfect-reconstruction PQMF bank.

    The prototype cutoff is chosen by golden-section search over
    ``(0.25/(2M), 1.5/(2M)]`` minimizing the impulse round-trip error.
    """
    num_bands = check_positive_int(num_bands, "num_bands", minimum=2)
    taps = 8 * num_bands if taps is None else check_positive_int(taps, "taps")
    if taps % 2:
        raise DesignError(f"taps must be even, got {taps}")
    if taps < 4 * num_bands:
        raise DesignError(f"taps={taps} < 4*M={4 * num_bands}: insufficient stopband")
    if not attenuation_db > 0:
        raise DesignError("attenuation_db must be positive")

    band = 1.0 / (2 * num_bands)
    cutoff = golden_section(
        lambda fc: _roundtrip_error(kaiser_prototype(taps, fc, attenuation_db), num_bands),
        0.25 * band, 1.5 * band,
    )
    bank = PqmfBank.from_prototype(num_bands, kaiser_prototype(taps, cutoff, attenuation_db),
                                   cutoff, attenuation_db)
    if not bank.certified_snr_db >= MIN_CERTIFIED_SNR_DB:
        raise DesignError(
            f"best design reaches {bank.certified_snr_db:.1f} dB round-trip SNR "
            f"(< {MIN_CERTIFIED_SNR_DB} dB)"
        )
    return bank


@dataclass(frozen=True)
class Subbands:
    """Decimated band signals, shape (M, L).

    ``length`` is the original signal length before right-padding to a
    multiple of M.
    """

    bands: np.ndarray
    sample_rate_hz: int
    length: int

    @property
    def num_bands(self):
        return self.bands.shape[0]

    @property
    def band_width_hz(self):
        return self.sample_rate_hz / (2 * self.num_bands)


def analyze(bank, signal):
    """Split ``signal`` into ``bank.num_bands`` decimated subbands.

    Lengths that are not a multiple of M are right-padded with zeros.
    """
    x = check_audio(signal, allow_empty=True)
    m = bank.num_bands
    length = x.shape[0]
    padded_len = -(-length // m) * m
    if padded_len == 0:
        return Subbands(np.zeros((m, 0)), signal.sample_rate_hz, 0)
    x = np.pad(x, (0, padded_len - length))
    bands = _analyze_array(x, bank.analysis_kernels, m)
    return Subbands(bands, signal.sample_rate_hz, length)


def synthesize(bank, subbands):
    """Recombine subbands into a signal of length M * L, delay-compensated."""
    bands = np.asarray(subbands.bands, dtype=np.float64)
    if bands.ndim != 2 or bands.shape[0] != bank.num_bands:
        raise ShapeError(f"expected ({bank.num_bands}, L) subbands, got {bands.shape}")
    if bands.shape[1] == 0:
        return Signal(np.zeros(0), subbands.sample_rate_hz)
    return Signal(_synthesize_array(bands, bank.synthesis_kernels, bank.num_bands),
                  subbands.sample_rate_hz)


def band_frequency_response(bank, band_index, n_points=512):
    """Magnitude response of analysis filter ``band_index`` in dB.

    Returns ``(freqs, magnitude_db)`` with ``n_points`` normalized
    frequencies evenly spaced on ``[0, 0.5)``.
    """
    if not 0 <= band_index < bank.num_bands:
        raise ValueError(f"band_index must be in [0, {bank.num_bands}), got {band_index}")
    n_points = check_positive_int(n_points, "n_points")
    spectrum = np.fft.rfft(bank.analysis_kernels[band_index], n=2 * n_points)[:n_points]
    freqs = np.arange(n_points) / (2.0 * n_points)
    mag = np.abs(spectrum)
    with np.errstate(divide="ignore"):
        return freqs, 20.0 * np.log10(np.maximum(mag, 1e-300))


class PQMF(TransformerMixin, BaseEstimator):
    """Scikit-learn style wrapper around a PQMF bank.

    ``transform`` maps a signal (T,) to subbands (M, T/M), or a batch
    (n, T) to (n, M, T/M). ``inverse_transform`` undoes it.

    Parameters
    ----------
    n_bands : int, default=4
    taps : int or None, default=None
        Prototype length; ``None`` means ``8 * n_bands``.
    attenuation_db : float, default=100.0
        Kaiser design attenuation.
    """

    def __init__(self, n_bands=4, taps=None, attenuation_db=100.0):
        self.n_bands = n_bands
        self.taps = taps
        self.attenuation_db = attenuation_db

    def fit(self, X=None, y=None):
        self.bank_ = design_bank(self.n_bands, self.taps, self.attenuation_db)
        return self

    def transform(self, X):
        check_is_fitted(self, "bank_")
        X, single = check_audio_batch(X)
        m = self.bank_.num_bands
        padded = -(-X.shape[1] // m) * m
        X = np.pad(X, ((0, 0), (0, padded - X.shape[1])))
        out = np.stack([_analyze_array(x, self.bank_.analysis_kernels, m) for x in X])
        return out[0] if single else out

    def inverse_transform(self, B):
        check_is_fitted(self, "bank_")
        B = np.asarray(B, dtype=np.float64)
        single = B.ndim == 2
        if single:
            B = B[None]
        if B.ndim != 3 or B.shape[1] != self.bank_.num_bands:
            raise ShapeError(f"expected (n, {self.bank_.num_bands}, L) subbands, got {B.shape}")
        out = np.stack([_synthesize_array(b, self.bank_.synthesis_kernels, self.bank_.num_bands)
                        for b in B])
        return out[0] if single else out
