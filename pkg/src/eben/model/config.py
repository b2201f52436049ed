"""Generator and discriminator hyperparameters.

The defaults give a generator of about 3 M parameters; JSON config files use
the same field names as these dataclasses.
"""
import json
import math
from dataclasses import asdict, dataclass, fields

from ..exceptions import ConfigError

NUM_SCALES = 4


@dataclass(frozen=True)
class GeneratorConfig:
    num_bands: int = 4
    bands_to_generator: int = 1
    encoder_strides: tuple = (2, 4, 8)
    base_channels: int = 32
    residual_dilations: tuple = (1, 3, 9)
    latent_channels: int = 128
    kernel_size: int = 7

    def __post_init__(self):
        object.__setattr__(self, "encoder_strides", tuple(int(s) for s in self.encoder_strides))
        object.__setattr__(self, "residual_dilations", tuple(int(d) for d in self.residual_dilations))
        if self.num_bands < 2:
            raise ConfigError("num_bands must be >= 2")
        if not 1 <= self.bands_to_generator < self.num_bands:
            raise ConfigError("bands_to_generator must lie in [1, num_bands)")
        if any(s < 1 for s in self.encoder_strides):
            raise ConfigError("encoder strides must be positive")
        if any(d < 1 for d in self.residual_dilations):
            raise ConfigError("residual dilations must be positive")
        if min(self.base_channels, self.latent_channels, self.kernel_size) < 1:
            raise ConfigError("channel counts and kernel size must be positive")

    @property
    def hop(self):
        """Input lengths must be multiples of this."""
        return self.num_bands * math.prod(self.encoder_strides)

    def to_dict(self):
        d = asdict(self)
        d["encoder_strides"] = list(self.encoder_strides)
        d["residual_dilations"] = list(self.residual_dilations)
        return d


@dataclass(frozen=True)
class DiscriminatorConfig:
    """MelGAN-style layer plan shared by all four scales.

    Scale 0 (full rate) has ``len(channels)`` grouped strided stages; the
    band scales 1..3 drop the last one since their input is already
    decimated.
    """

    num_scales: int = NUM_SCALES
    first_channels: int = 16
    channels: tuple = (64, 256, 1024, 1024)
    first_kernel: int = 15
    grouped_kernel: int = 41
    grouped_stride: int = 4
    groups: int = 4
    post_kernel: int = 5
    out_kernel: int = 3
    leaky_slope: float = 0.2

    def __post_init__(self):
        object.__setattr__(self, "channels", tuple(int(c) for c in self.channels))
        if self.num_scales != NUM_SCALES:
            raise ConfigError(f"num_scales is fixed at {NUM_SCALES}")
        if len(self.channels) < 2:
            raise ConfigError("need at least two grouped stages")
        widths = (self.first_channels,) + self.channels
        if any(w % self.groups for w in widths):
            raise ConfigError("every channel width must be divisible by groups")

    def stage_widths(self, scale):
        n = len(self.channels) if scale == 0 else len(self.channels) - 1
        return (self.first_channels,) + self.channels[:n]

    def num_layers(self, scale):
        return len(self.stage_widths(scale)) + 2

    def to_dict(self):
        d = asdict(self)
        d["channels"] = list(self.channels)
        return d


def _from_dict(cls, doc):
    names = {f.name for f in fields(cls)}
    unknown = set(doc) - names
    if unknown:
        raise ConfigError(f"unknown {cls.__name__} fields: {sorted(unknown)}")
    return cls(**doc)


def load_config(path):
    """Read ``{"generator": {...}, "discriminator": {...}}``; both optional."""
    with open(path) as fh:
        doc = json.load(fh)
    if not isinstance(doc, dict):
        raise ConfigError("config must be a JSON object")
    unknown = set(doc) - {"generator", "discriminator"}
    if unknown:
        raise ConfigError(f"unknown config sections: {sorted(unknown)}")
    return (_from_dict(GeneratorConfig, doc.get("generator", {})),
            _from_dict(DiscriminatorConfig, doc.get("discriminator", {})))
