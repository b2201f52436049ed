"""Subband bandwidth extension for body-conducted speech.

Signal I/O and convolutions, a cosine-modulated PQMF bank, an in-ear
degradation simulator, Welch spectral estimates, SI-SDR / STOI and a numpy
implementation of the EBEN generator and discriminators.
"""
__version__ = "0.1.0"

from .degrade import DegradationConfig, InEarDegrader, degrade, filtfilt
from .exceptions import (
    ChecksumError,
    ConfigError,
    DegenerateInputError,
    DesignError,
    EbenError,
    ShapeError,
    UnsupportedEncodingError,
    WavFormatError,
    WeightsFormatError,
)
from .metrics import batch_evaluate, si_sdr, stoi
from .pqmf import PQMF, PqmfBank, analyze, design_bank, synthesize
from .signal import ConvSpec, Signal, conv1d, conv1d_transposed, read_wav, write_wav
from .spectral import DegradationAnalyzer, WelchConfig, coherence, spectrogram, welch_cross

__all__ = [
    "ChecksumError", "ConfigError", "ConvSpec", "DegenerateInputError", "DegradationAnalyzer",
    "DegradationConfig", "DesignError", "EbenError", "InEarDegrader", "PQMF", "PqmfBank",
    "ShapeError", "Signal", "UnsupportedEncodingError", "WavFormatError", "WeightsFormatError",
    "WelchConfig", "analyze", "batch_evaluate", "coherence", "conv1d", "conv1d_transposed",
    "degrade", "design_bank", "filtfilt", "read_wav", "si_sdr", "spectrogram", "stoi",
    "synthesize", "welch_cross", "write_wav",
]
