"""Hinge adversarial losses and discriminator feature matching.

All three losses take one :class:`DiscriminatorOutput` per scale (K = 4).
Time averages use each scale's own length; arrays may carry leading batch
axes, over which the expectation is a plain mean.
"""
from dataclasses import dataclass

import numpy as np

from .config import NUM_SCALES

DEFAULT_LAMBDA = 100.0


@dataclass(frozen=True)
class LossBreakdown:
    l_d: object  # None when only the generator side was computed
    l_g_adv: float
    l_g_rec: float
    lam: float
    l_g: float

    def to_dict(self):
        return {"l_d": self.l_d, "l_g_adv": self.l_g_adv, "l_g_rec": self.l_g_rec,
                "lambda": self.lam, "l_g": self.l_g}


def _check_outputs(outputs, name):
    if len(outputs) != NUM_SCALES:
        raise ValueError(f"{name}: expected {NUM_SCALES} scales, got {len(outputs)}")


def _check_pair(real, fake):
    _check_outputs(real, "real_outputs")
    _check_outputs(fake, "fake_outputs")
    for k, (r, f) in enumerate(zip(real, fake)):
        if r.num_layers != f.num_layers:
            raise ValueError(f"scale {k}: {r.num_layers} real layers vs {f.num_layers} fake")
        for l, (a, b) in enumerate(zip(r.features, f.features)):
            if np.shape(a) != np.shape(b):
                raise ValueError(f"scale {k} layer {l}: shapes {np.shape(a)} and {np.shape(b)} differ")


def _hinge(logits, sign):
    # mean over time (and the single logit channel), then over the batch
    return float(np.mean(np.maximum(0.0, 1.0 + sign * np.asarray(logits, dtype=np.float64))))


def loss_discriminator(real_outputs, fake_outputs):
    """Hinge loss pushing real logits above +1 and fake logits below -1."""
    _check_outputs(real_outputs, "real_outputs")
    _check_outputs(fake_outputs, "fake_outputs")
    for k, (r, f) in enumerate(zip(real_outputs, fake_outputs)):
        if np.shape(r.logits) != np.shape(f.logits):
            raise ValueError(f"scale {k}: logits shapes differ")
    real = sum(_hinge(o.logits, -1.0) for o in real_outputs) / NUM_SCALES
    fake = sum(_hinge(o.logits, +1.0) for o in fake_outputs) / NUM_SCALES
    return real + fake


def loss_generator_adv(fake_outputs):
    _check_outputs(fake_outputs, "fake_outputs")
    return sum(_hinge(o.logits, -1.0) for o in fake_outputs) / NUM_SCALES


def loss_generator_rec(real_outputs, fake_outputs):
    """Feature matching: mean absolute feature difference per layer.

    The logit layer is excluded; each layer is normalized by T * F, summed
    over layers, and averaged over scales.
    """
    _check_pair(real_outputs, fake_outputs)
    total = 0.0
    for r, f in zip(real_outputs, fake_outputs):
        for a, b in zip(r.features[:-1], f.features[:-1]):
            total += float(np.mean(np.abs(np.asarray(a, dtype=np.float64) - b)))
    return total / NUM_SCALES


def loss_generator_total(adv, rec, lam=DEFAULT_LAMBDA, l_d=None):
    """Combine the generator terms as ``adv + lam * rec``."""
    if adv < 0 or rec < 0:
        raise ValueError("adversarial and reconstruction losses must be nonnegative")
    l_d = None if l_d is None else float(l_d)
    return LossBreakdown(l_d, float(adv), float(rec), float(lam), adv + lam * rec)
