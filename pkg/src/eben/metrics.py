"""Intrusive objective metrics: SI-SDR and STOI, plus batch evaluation."""
import csv
import json
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from fractions import Fraction

import numpy as np
from scipy.signal import upfirdn
from scipy.signal.windows import kaiser

from ._validation import check_audio, check_same_length
from .exceptions import DegenerateInputError
from .signal import Signal, read_wav

logger = logging.getLogger(__name__)

SI_SDR_CAP_DB = 100.0
SI_SDR_RESIDUAL_RATIO = 1e-10

STOI_FS = 10000
STOI_FRAME = 256
STOI_NFFT = 512
STOI_BANDS = 15
STOI_MIN_FREQ = 150.0
STOI_SEGMENT = 30
STOI_BETA_DB = -15.0
STOI_DYN_RANGE_DB = 40.0
STOI_MIN_DURATION_S = 0.5

RESAMPLE_TAPS_PER_PHASE = 64
RESAMPLE_ATTENUATION_DB = 80.0

EPS = np.finfo(np.float64).eps
METRICS = ("si-sdr", "stoi")


@dataclass
class MetricReport:
    name: str
    value: float
    valid: bool = True
    reference: str = ""
    estimate: str = ""
    detail: dict = field(default_factory=dict)


def si_sdr(reference, estimate):
    """Scale-invariant SDR in dB, capped at +/-100 dB.

    The estimate is projected on the reference; the cap applies when the
    residual is below 1e-10 of the projection energy (and symmetrically when
    the projection vanishes).
    """
    ref = check_audio(reference, "reference")
    est = check_audio(estimate, "estimate")
    check_same_length(ref, est)
    ref_energy = float(np.dot(ref, ref))
    if ref_energy == 0:
        raise DegenerateInputError("reference is identically zero")
    target = (np.dot(est, ref) / ref_energy) * ref
    target_energy = float(np.dot(target, target))
    residual = est - target
    residual_energy = float(np.dot(residual, residual))
    if residual_energy < SI_SDR_RESIDUAL_RATIO * target_energy:
        return SI_SDR_CAP_DB
    if target_energy < SI_SDR_RESIDUAL_RATIO * residual_energy:
        return -SI_SDR_CAP_DB
    return 10.0 * math.log10(target_energy / residual_energy)


def resample(x, fs_in, fs_out):
    """Rational-ratio polyphase resampling with a Kaiser windowed-sinc filter.

    The filter has 64 taps per phase (plus one for symmetry), cutoff at the
    lower Nyquist rate and 80 dB design attenuation. Output length is
    ``ceil(len(x) * fs_out / fs_in)``, aligned with zero delay.
    """
    x = np.asarray(x, dtype=np.float64)
    if fs_in == fs_out:
        return x.copy()
    ratio = Fraction(int(fs_out), int(fs_in))
    up, down = ratio.numerator, ratio.denominator
    length = RESAMPLE_TAPS_PER_PHASE * up + 1
    half = (length - 1) // 2
    cutoff = 1.0 / (2.0 * max(up, down))
    n = np.arange(length) - half
    beta = 0.1102 * (RESAMPLE_ATTENUATION_DB - 8.7)
    h = up * 2.0 * cutoff * np.sinc(2.0 * cutoff * n) * kaiser(length, beta)
    # align the filter centre with an output sample
    pre = (-half) % down
    h = np.concatenate([np.zeros(pre), h])
    offset = (half + pre) // down
    n_out = -(-x.shape[0] * up // down)
    y = upfirdn(h, x, up, down)
    y = np.pad(y, (0, max(0, offset + n_out - y.shape[0])))
    return y[offset:offset + n_out]


def _stoi_window():
    # MATLAB hanning(N): the symmetric Hann without its zero end points
    return np.hanning(STOI_FRAME + 2)[1:-1]


def _frame_starts(length):
    return np.arange(0, length - STOI_FRAME, STOI_FRAME // 2)


def remove_silent_frames(x, y, dyn_range=STOI_DYN_RANGE_DB):
    """Drop frames whose reference energy is ``dyn_range`` dB below the loudest.

    Kept frames (windowed) are overlap-added back into two signals.
    """
    window = _stoi_window()
    hop = STOI_FRAME // 2
    starts = _frame_starts(x.shape[0])
    idx = starts[:, None] + np.arange(STOI_FRAME)[None, :]
    x_frames = x[idx] * window
    y_frames = y[idx] * window
    energies = 20.0 * np.log10(np.linalg.norm(x_frames, axis=1) + EPS)
    keep = energies > np.max(energies) - dyn_range
    x_frames, y_frames = x_frames[keep], y_frames[keep]
    n_kept = x_frames.shape[0]
    out_len = (n_kept - 1) * hop + STOI_FRAME if n_kept else 0
    x_out = np.zeros(out_len)
    y_out = np.zeros(out_len)
    for i in range(n_kept):
        x_out[i * hop:i * hop + STOI_FRAME] += x_frames[i]
        y_out[i * hop:i * hop + STOI_FRAME] += y_frames[i]
    return x_out, y_out


def third_octave_matrix(fs=STOI_FS, nfft=STOI_NFFT, num_bands=STOI_BANDS, min_freq=STOI_MIN_FREQ):
    """(num_bands, nfft/2+1) 0/1 matrix grouping FFT bins into 1/3-octave bands."""
    freqs = np.linspace(0, fs, nfft + 1)[:nfft // 2 + 1]
    k = np.arange(num_bands, dtype=np.float64)
    centres = min_freq * 2.0 ** (k / 3.0)
    lows = min_freq * 2.0 ** ((2 * k - 1) / 6.0)
    highs = min_freq * 2.0 ** ((2 * k + 1) / 6.0)
    matrix = np.zeros((num_bands, freqs.shape[0]))
    for i in range(num_bands):
        lo = int(np.argmin((freqs - lows[i]) ** 2))
        hi = int(np.argmin((freqs - highs[i]) ** 2))
        matrix[i, lo:hi] = 1.0
    return matrix, centres


def _band_envelopes(x, matrix):
    window = _stoi_window()
    starts = _frame_starts(x.shape[0])
    idx = starts[:, None] + np.arange(STOI_FRAME)[None, :]
    spec = np.fft.rfft(x[idx] * window, n=STOI_NFFT)
    return np.sqrt(matrix @ (np.abs(spec) ** 2).T)


def stoi(reference, estimate):
    """Short-time objective intelligibility of ``estimate`` against ``reference``."""
    ref = check_audio(reference, "reference")
    est = check_audio(estimate, "estimate")
    check_same_length(ref, est)
    fs = reference.sample_rate_hz
    if estimate.sample_rate_hz != fs:
        raise ValueError("reference and estimate sample rates differ")
    x = resample(ref, fs, STOI_FS)
    y = resample(est, fs, STOI_FS)
    if x.shape[0] < STOI_MIN_DURATION_S * STOI_FS:
        raise ValueError(f"STOI needs at least {STOI_MIN_DURATION_S} s of audio")
    if not np.any(x):
        raise DegenerateInputError("reference is silent in every frame")

    x, y = remove_silent_frames(x, y)
    matrix, _ = third_octave_matrix()
    x_env = _band_envelopes(x, matrix) if x.shape[0] > STOI_FRAME else np.zeros((STOI_BANDS, 0))
    y_env = _band_envelopes(y, matrix) if y.shape[0] > STOI_FRAME else np.zeros((STOI_BANDS, 0))
    n_frames = x_env.shape[1]
    if n_frames < STOI_SEGMENT:
        raise DegenerateInputError(
            f"only {n_frames} non-silent frames; STOI needs {STOI_SEGMENT}"
        )

    # (segments, bands, frames-per-segment)
    seg_idx = np.arange(n_frames - STOI_SEGMENT + 1)[:, None] + np.arange(STOI_SEGMENT)[None, :]
    xs = x_env[:, seg_idx].transpose(1, 0, 2)
    ys = y_env[:, seg_idx].transpose(1, 0, 2)

    gain = np.linalg.norm(xs, axis=2, keepdims=True) / (np.linalg.norm(ys, axis=2, keepdims=True) + EPS)
    clip = 1.0 + 10.0 ** (-STOI_BETA_DB / 20.0)
    yp = np.minimum(ys * gain, xs * clip)
    yp = yp - yp.mean(axis=2, keepdims=True)
    xc = xs - xs.mean(axis=2, keepdims=True)
    yp /= np.linalg.norm(yp, axis=2, keepdims=True) + EPS
    xc /= np.linalg.norm(xc, axis=2, keepdims=True) + EPS
    return float(np.sum(xc * yp) / (xc.shape[0] * xc.shape[1]))


METRIC_FUNCTIONS = {"si-sdr": si_sdr, "stoi": stoi}


def _evaluate_pair(pair, metrics):
    ref_path, est_path = str(pair[0]), str(pair[1])
    try:
        ref = read_wav(ref_path)
        est = read_wav(est_path)
        if ref.sample_rate_hz != est.sample_rate_hz:
            raise ValueError(f"sample rates differ: {ref.sample_rate_hz} vs {est.sample_rate_hz}")
        n = min(len(ref), len(est))
        if len(ref) != len(est):
            logger.warning("trimming %s / %s to %d samples", ref_path, est_path, n)
            ref = Signal(ref.samples[:n], ref.sample_rate_hz)
            est = Signal(est.samples[:n], est.sample_rate_hz)
    except Exception as exc:  # unreadable pair: every metric row carries the error
        return [MetricReport(m, math.nan, False, ref_path, est_path, {"error": str(exc)})
                for m in metrics]
    rows = []
    for name in metrics:
        try:
            value = METRIC_FUNCTIONS[name](ref, est)
            rows.append(MetricReport(name, float(value), True, ref_path, est_path))
        except Exception as exc:
            rows.append(MetricReport(name, math.nan, False, ref_path, est_path, {"error": str(exc)}))
    return rows


def summarize(rows):
    """``{metric: {median, iqr, n}}`` over valid rows, as reported in tables."""
    summary = {}
    for name in dict.fromkeys(r.name for r in rows):
        values = np.array([r.value for r in rows if r.name == name and r.valid])
        if values.size:
            q25, q50, q75 = np.percentile(values, [25, 50, 75])
            summary[name] = {"median": float(q50), "iqr": float(q75 - q25), "n": int(values.size)}
        else:
            summary[name] = {"median": None, "iqr": None, "n": 0}
    return summary


@dataclass
class BatchResult:
    rows: list
    summary: dict

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["ref", "est", "metric", "value", "valid"])
            for r in self.rows:
                writer.writerow([r.reference, r.estimate, r.name, repr(r.value), int(r.valid)])

    def to_json(self):
        return json.dumps({"summary": self.summary, "rows": [asdict(r) for r in self.rows]},
                          allow_nan=True)


def batch_evaluate(pairs, metrics=METRICS, n_jobs=1):
    """Evaluate (reference path, estimate path) pairs.

    Rows come back in input order whatever the completion order; an
    unreadable file yields invalid rows with the error in ``detail``.
    """
    metrics = tuple(metrics)
    unknown = [m for m in metrics if m not in METRIC_FUNCTIONS]
    if unknown:
        raise ValueError(f"unknown metrics {unknown}; choose from {METRICS}")
    pairs = list(pairs)
    if n_jobs > 1 and len(pairs) > 1:
        with ThreadPoolExecutor(max_workers=n_jobs) as pool:
            per_pair = list(pool.map(lambda p: _evaluate_pair(p, metrics), pairs))
    else:
        per_pair = [_evaluate_pair(p, metrics) for p in pairs]
    rows = [row for group in per_pair for row in group]
    return BatchResult(rows, summarize(rows))
