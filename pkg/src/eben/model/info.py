"""Parameter counts and algorithmic latency of the configured model."""
import math

from ..signal import ConvSpec
from .config import DiscriminatorConfig, GeneratorConfig, NUM_SCALES
from .discriminator import discriminator_param_shapes
from .generator import build_generator, generator_param_shapes
from .graph import Conv, ConvTranspose, SelectChannels, Sequential
from .weights import WeightStore

REALTIME_BUDGET_MS = 20.0


def model_param_shapes(gen_config=None, disc_config=None):
    """Every parameter of the generator followed by the four discriminators."""
    shapes = dict(generator_param_shapes(gen_config or GeneratorConfig()))
    shapes.update(discriminator_param_shapes(disc_config or DiscriminatorConfig()))
    return shapes


def count_parameters(source=None, disc_config=None):
    """Parameter totals (weights + biases) per component.

    ``source`` is a :class:`WeightStore` or a :class:`GeneratorConfig`
    (``None`` means the defaults).
    """
    if isinstance(source, WeightStore):
        per_scale = [source.num_parameters(f"discriminator.{k}.") for k in range(NUM_SCALES)]
        generator = source.num_parameters("generator.")
    else:
        gen_shapes = generator_param_shapes(source or GeneratorConfig())
        disc_config = disc_config or DiscriminatorConfig()
        generator = sum(math.prod(s) for s in gen_shapes.values())
        per_scale = [sum(math.prod(s) for s in discriminator_param_shapes(disc_config, k).values())
                     for k in range(NUM_SCALES)]
    return {
        "generator": generator,
        "discriminators": sum(per_scale),
        "discriminator_per_scale": per_scale,
        "total": generator + sum(per_scale),
    }


def pipeline_graph(config, bank):
    """Analysis, generator and synthesis as one full-rate graph.

    The PQMF stages appear as plain convolutions named ``pqmf.*``.
    """
    m, taps = bank.num_bands, bank.taps
    pad = bank.padding
    return Sequential(
        Conv("pqmf.analysis", ConvSpec(1, m, taps, stride=m, padding=pad)),
        SelectChannels(0, config.bands_to_generator),
        build_generator(config),
        ConvTranspose("pqmf.synthesis", ConvSpec(m, 1, taps, stride=m, padding=pad)),
    )


def latency_of(node, period):
    """``(lookahead, receptive_field)`` in input samples for a periodic graph.

    Lookahead is the furthest future input any output reads; the receptive
    field is the widest input span one output reads. Both are maxima over
    the ``period`` output phases.
    """
    lookahead = -math.inf
    field = 0
    for n in range(period):
        lo, hi = node.dependence((n, n))
        lookahead = max(lookahead, hi - n)
        field = max(field, hi - lo + 1)
    return max(0, lookahead), field


def influence_lookahead(node, period):
    """Lookahead measured from the input side: how early an input is felt."""
    return max(0, max(j - node.influence((j, j))[0] for j in range(period)))


def report_latency(config=None, bank=None, sample_rate_hz=16000):
    from ..pqmf import design_bank

    config = config or GeneratorConfig()
    bank = bank or design_bank(config.num_bands)
    lookahead, field = latency_of(pipeline_graph(config, bank), config.hop)
    lookahead_ms = 1000.0 * lookahead / sample_rate_hz
    return {
        "lookahead_samples": int(lookahead),
        "lookahead_ms": lookahead_ms,
        "receptive_field_samples": int(field),
        "meets_realtime_budget": lookahead_ms <= REALTIME_BUDGET_MS,
        "budget_ms": REALTIME_BUDGET_MS,
    }
