"""Seeded speech-like test material.

No speech corpus ships with the package, so fixtures come from a small
source-filter synthesizer: a jittered glottal pulse train (about -6 dB/oct
after lip radiation) shaped by three formant resonators per vowel, bursts
of band-passed noise for fricatives, syllable envelopes with deep valleys,
and pauses. Spectral tilt and modulation depth are close to running speech,
which is what filtering, coherence and intelligibility metrics respond to.
"""
import numpy as np
from scipy.signal import butter, lfilter

from .signal import Signal

# (F1, F2, F3) in Hz, Peterson & Barney style averages
VOWEL_FORMANTS = (
    (730, 1090, 2440),
    (270, 2290, 3010),
    (300, 870, 2240),
    (530, 1840, 2480),
    (570, 840, 2410),
    (660, 1720, 2410),
    (490, 1350, 1690),
)
FORMANT_BANDWIDTHS = (80.0, 100.0, 150.0)


def _resonator(freq, bandwidth, fs):
    r = np.exp(-np.pi * bandwidth / fs)
    a = np.array([1.0, -2.0 * r * np.cos(2.0 * np.pi * freq / fs), r * r])
    return np.array([a.sum()]), a


def _vowel(rng, n, f0_base, fs):
    t = np.arange(n) / fs
    f0 = f0_base * (1.0 + 0.15 * np.sin(2 * np.pi * rng.uniform(2, 5) * t + rng.uniform(0, 2 * np.pi)))
    pulses = np.diff(np.floor(np.cumsum(f0 / fs)), prepend=0.0)
    glottal = lfilter([1.0], [1.0, -0.97], lfilter([1.0], [1.0, -0.97], pulses))
    source = np.diff(glottal, prepend=0.0) + 0.002 * rng.standard_normal(n)
    out = source
    formants = VOWEL_FORMANTS[rng.integers(len(VOWEL_FORMANTS))]
    for freq, bw in zip(formants, FORMANT_BANDWIDTHS):
        b, a = _resonator(freq * rng.uniform(0.92, 1.08), bw, fs)
        out = lfilter(b, a, out)
    b, a = _resonator(3500.0, 250.0, fs)
    return out + 0.3 * lfilter(b, a, source)


def _fricative(rng, n, fs):
    lo = rng.uniform(2500, 4000) / (fs / 2)
    hi = min(0.95, rng.uniform(5000, 7500) / (fs / 2))
    b, a = butter(2, [lo, hi], btype="band")
    return lfilter(b, a, rng.standard_normal(n))


def _normalize(x):
    return x / np.sqrt(np.mean(x ** 2) + 1e-12)


def make_speech_like(duration_s=10.0, sample_rate_hz=16000, seed=0, peak=0.5):
    """Synthesize ``duration_s`` seconds of speech-like audio.

    Same ``seed`` gives the same samples. The result is scaled to ``peak``.
    """
    rng = np.random.default_rng(seed)
    fs = sample_rate_hz
    n = int(round(duration_s * fs))
    out = np.zeros(n)
    f0_base = rng.uniform(95, 220)
    t = int(0.3 * fs)
    while t < n - int(0.3 * fs):
        if rng.random() < 0.4:
            length = int(rng.uniform(0.05, 0.12) * fs)
            seg = _fricative(rng, length, fs) * np.hanning(length) * rng.uniform(0.05, 0.2)
            end = min(n, t + length)
            out[t:end] += seg[:end - t]
            t = end
        length = int(rng.uniform(0.1, 0.25) * fs)
        # per-syllable intonation
        f0 = f0_base * rng.uniform(0.75, 1.35)
        seg = _normalize(_vowel(rng, length, f0, fs)) * np.hanning(length) ** 2
        seg *= rng.uniform(0.3, 1.0)
        end = min(n, t + length)
        out[t:end] += seg[:end - t]
        t = end
        if rng.random() < 0.3:
            t += int(rng.uniform(0.1, 0.4) * fs)
        else:
            t += int(rng.uniform(0.0, 0.05) * fs)
    top = np.max(np.abs(out))
    if top > 0:
        out *= peak / top
    return Signal(out, fs)


def make_corpus(n_clips=10, duration_s=10.0, sample_rate_hz=16000, seed=0):
    """List of ``n_clips`` clips with seeds ``seed, seed + 1, ...``."""
    return [make_speech_like(duration_s, sample_rate_hz, seed + i) for i in range(n_clips)]
