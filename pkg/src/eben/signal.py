"""Audio buffers, WAV I/O, FFT and 1-D (transposed) convolution primitives.

Tensors are plain ``numpy.ndarray`` objects (row-major, float64 unless
stated otherwise). Convolutions follow the cross-correlation convention used
by deep-learning frameworks, so published weights map over unchanged.
"""
import warnings
from dataclasses import dataclass, field

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from scipy.io import wavfile

from ._validation import check_audio, check_positive_int, check_sample_rate, is_power_of_two
from .exceptions import ShapeError, UnsupportedEncodingError, WavFormatError

PCM16_SCALE = 32768.0


@dataclass(frozen=True)
class Signal:
    """Mono audio with its sample rate.

    ``samples`` is stored as a read-only float64 array.
    """

    samples: np.ndarray
    sample_rate_hz: int

    def __post_init__(self):
        samples = check_audio(self.samples, "samples", allow_empty=True).copy()
        samples.flags.writeable = False
        object.__setattr__(self, "samples", samples)
        object.__setattr__(self, "sample_rate_hz", check_sample_rate(self.sample_rate_hz))

    def __len__(self):
        return self.samples.shape[0]

    @property
    def duration_s(self):
        return len(self) / self.sample_rate_hz

    def replace(self, samples):
        """New signal at the same rate."""
        return Signal(samples, self.sample_rate_hz)


def read_wav(path, channel=None):
    """Read a PCM16 or float32 WAV file.

    Multi-channel files are rejected unless ``channel`` selects one of them.
    PCM16 values are divided by 32768, so -32768 maps to exactly -1.0.
    """
    try:
        with warnings.catch_warnings():
            # a header promising more data than the file holds is corruption
            warnings.simplefilter("error", wavfile.WavFileWarning)
            rate, data = wavfile.read(path)
    except FileNotFoundError:
        raise
    except wavfile.WavFileWarning as exc:
        raise WavFormatError(f"{path}: {exc}") from exc
    except ValueError as exc:
        msg = str(exc)
        if "Unknown wave file format" in msg or "Unsupported" in msg or "bit depth" in msg:
            raise UnsupportedEncodingError(f"{path}: {msg}") from exc
        raise WavFormatError(f"{path}: {msg}") from exc
    except (EOFError, IndexError, OSError) as exc:
        if isinstance(exc, (FileNotFoundError, PermissionError, IsADirectoryError)):
            raise
        raise WavFormatError(f"{path}: {exc}") from exc

    if data.ndim == 2:
        if channel is None:
            raise UnsupportedEncodingError(
                f"{path}: {data.shape[1]} channels; select one with channel="
            )
        if not 0 <= channel < data.shape[1]:
            raise ValueError(f"channel {channel} out of range for {data.shape[1]} channels")
        data = data[:, channel]

    if data.dtype == np.int16:
        samples = data.astype(np.float64) / PCM16_SCALE
    elif data.dtype == np.float32:
        samples = data.astype(np.float64)
    else:
        raise UnsupportedEncodingError(f"{path}: unsupported sample type {data.dtype}")
    if not np.all(np.isfinite(samples)):
        raise WavFormatError(f"{path}: non-finite samples")
    return Signal(samples, int(rate))


def encode_pcm16(samples):
    """Scale by 32768, round, and saturate to the int16 range."""
    scaled = np.rint(np.asarray(samples, dtype=np.float64) * PCM16_SCALE)
    return np.clip(scaled, -32768, 32767).astype("<i2")


def write_wav(signal, path, encoding="pcm16"):
    """Write ``signal`` as mono PCM16 (saturating) or IEEE float32."""
    if encoding == "pcm16":
        data = encode_pcm16(signal.samples)
    elif encoding == "float32":
        data = signal.samples.astype("<f4")
    else:
        raise ValueError(f"encoding must be 'pcm16' or 'float32', got {encoding!r}")
    wavfile.write(path, signal.sample_rate_hz, data)


def rfft(frame, n):
    """Half spectrum (``n // 2 + 1`` bins) of ``frame`` zero-padded to ``n``."""
    if not is_power_of_two(n):
        raise ValueError(f"transform length must be a power of two, got {n}")
    frame = np.asarray(frame, dtype=np.float64)
    if frame.shape[-1] > n:
        raise ValueError(f"frame length {frame.shape[-1]} exceeds transform length {n}")
    return np.fft.rfft(frame, n=n)


@dataclass(frozen=True)
class ConvSpec:
    in_channels: int
    out_channels: int
    kernel_size: int
    stride: int = 1
    dilation: int = 1
    groups: int = 1
    padding: tuple = field(default=(0, 0))

    def __post_init__(self):
        for name in ("in_channels", "out_channels", "kernel_size", "stride", "dilation", "groups"):
            check_positive_int(getattr(self, name), name)
        pad = self.padding
        if isinstance(pad, (int, np.integer)):
            pad = (int(pad), int(pad))
        pad = tuple(int(p) for p in pad)
        if len(pad) != 2 or min(pad) < 0:
            raise ValueError(f"padding must be two nonnegative integers, got {self.padding!r}")
        object.__setattr__(self, "padding", pad)
        if self.in_channels % self.groups or self.out_channels % self.groups:
            raise ValueError("in_channels and out_channels must be divisible by groups")

    @property
    def span(self):
        return self.dilation * (self.kernel_size - 1) + 1

    def output_length(self, t_in):
        left, right = self.padding
        return (t_in + left + right - self.span) // self.stride + 1

    def transposed_output_length(self, t_in):
        left, right = self.padding
        return (t_in - 1) * self.stride - left - right + self.span

    def weight_shape(self, transposed=False):
        if transposed:
            return (self.in_channels, self.out_channels // self.groups, self.kernel_size)
        return (self.out_channels, self.in_channels // self.groups, self.kernel_size)


def _check_conv_args(x, weight, bias, spec, transposed):
    x = np.asarray(x, dtype=np.float64)
    weight = np.asarray(weight, dtype=np.float64)
    if x.ndim != 2 or x.shape[0] != spec.in_channels:
        raise ShapeError(f"input must be ({spec.in_channels}, T), got {x.shape}")
    expected = spec.weight_shape(transposed)
    if weight.shape != expected:
        raise ShapeError(f"weight must have shape {expected}, got {weight.shape}")
    if bias is not None:
        bias = np.asarray(bias, dtype=np.float64)
        if bias.shape != (spec.out_channels,):
            raise ShapeError(f"bias must have shape ({spec.out_channels},), got {bias.shape}")
    return x, weight, bias


def conv1d(x, weight, bias, spec):
    """Strided, dilated, grouped 1-D cross-correlation.

    ``x`` is (C_in, T), ``weight`` is (C_out, C_in / groups, K); returns
    (C_out, T_out) with T_out given by ``spec.output_length``.
    """
    x, weight, bias = _check_conv_args(x, weight, bias, spec, transposed=False)
    t_out = spec.output_length(x.shape[1])
    if t_out < 1:
        raise ShapeError(f"input length {x.shape[1]} too short for kernel span {spec.span}")
    xp = np.pad(x, ((0, 0), spec.padding))
    # (C_in, T_out, K) view of every receptive field
    windows = sliding_window_view(xp, spec.span, axis=1)[:, :: spec.stride, :: spec.dilation]
    windows = windows[:, :t_out]

    g = spec.groups
    cin_g = spec.in_channels // g
    cout_g = spec.out_channels // g
    out = np.empty((spec.out_channels, t_out))
    for i in range(g):
        w = weight[i * cout_g:(i + 1) * cout_g]
        win = windows[i * cin_g:(i + 1) * cin_g]
        out[i * cout_g:(i + 1) * cout_g] = np.tensordot(w, win, axes=([1, 2], [0, 2]))
    if bias is not None:
        out += bias[:, None]
    return out


def conv1d_transposed(x, weight, bias, spec):
    """Adjoint of :func:`conv1d` (plus bias).

    ``x`` is (C_in, T), ``weight`` is (C_in, C_out / groups, K). Padding is
    cropped from the full-length output, so T_out = (T-1)*stride - pad_left
    - pad_right + dilation*(K-1) + 1.
    """
    x, weight, bias = _check_conv_args(x, weight, bias, spec, transposed=True)
    t_in = x.shape[1]
    t_out = spec.transposed_output_length(t_in)
    if t_out < 1:
        raise ShapeError(f"padding {spec.padding} leaves no output samples")
    full_len = (t_in - 1) * spec.stride + spec.span
    full = np.zeros((spec.out_channels, full_len))

    g = spec.groups
    cin_g = spec.in_channels // g
    cout_g = spec.out_channels // g
    last = (t_in - 1) * spec.stride + 1
    for i in range(g):
        xg = x[i * cin_g:(i + 1) * cin_g]
        wg = weight[i * cin_g:(i + 1) * cin_g]
        # (K, C_out_g, T): contribution of every tap
        taps = np.einsum("cok,ct->kot", wg, xg)
        dst = full[i * cout_g:(i + 1) * cout_g]
        for k in range(spec.kernel_size):
            start = k * spec.dilation
            dst[:, start:start + last:spec.stride] += taps[k]
    left, right = spec.padding
    out = full[:, left:full_len - right]
    if bias is not None:
        out = out + bias[:, None]
    return out
