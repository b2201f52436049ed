"""Exception hierarchy shared by every module."""


class EbenError(Exception):
    """Base class for all errors raised by this package."""


class WavFormatError(EbenError, ValueError):
    """Malformed or truncated RIFF/WAVE data."""


class UnsupportedEncodingError(EbenError, ValueError):
    """WAV encoding other than PCM16 or IEEE float32."""


class ShapeError(EbenError, ValueError):
    """Array shapes inconsistent with the requested operation."""


class DesignError(EbenError, ValueError):
    """A filter bank design could not meet its constraints."""


class DegenerateInputError(EbenError, ValueError):
    """Input carries no usable energy (silent reference, all-masked spectrum)."""


class ConfigError(EbenError, ValueError):
    """Inconsistent model configuration."""


class WeightsFormatError(EbenError, ValueError):
    """Weights file is corrupt, truncated or does not match the model."""


class ChecksumError(WeightsFormatError):
    """Weights file payload does not match its CRC32."""
