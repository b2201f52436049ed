"""``eben`` command line: one binary, five command groups.

Exit codes: 0 success, 1 usage error, 2 data error (bad or missing input,
failed design, mismatched weights), 3 internal error. With ``--json`` the
only thing written to stdout is one JSON document; logs go to stderr and
their level comes from ``EBEN_LOG_LEVEL``.
"""
import argparse
import csv
import json
import logging
import math
import os
import sys
from dataclasses import asdict
from pathlib import Path

import numpy as np

from . import __version__
from .degrade import DegradationConfig, degrade_components, measured_snr_db
from .exceptions import EbenError
from .metrics import METRICS, batch_evaluate, si_sdr, stoi
from .pqmf import PqmfBank, analyze, band_frequency_response, design_bank, snr_db, synthesize
from .signal import Signal, read_wav, write_wav
from .spectral import WelchConfig, coherence, spectrogram, transfer_function, welch_cross

logger = logging.getLogger("eben")

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_INTERNAL = 0, 1, 2, 3


class UsageError(Exception):
    pass


class PartialFailure(Exception):
    """Output was written but some inputs were bad (exit 2)."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _jsonable(value):
    if isinstance(value, dict):
        return {k: _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple, np.ndarray)):
        return [_jsonable(v) for v in value]
    if isinstance(value, (np.floating, float)):
        value = float(value)
        return value if math.isfinite(value) else None
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.bool_):
        return bool(value)
    return value


def _emit(args, result):
    if args.json:
        print(json.dumps(_jsonable(result)))
        return
    for key, value in result.items():
        if isinstance(value, dict):
            value = ", ".join(f"{k}={v}" for k, v in value.items())
        print(f"{key:<28} {value}")


def _write_columns(path, header, columns):
    rows = zip(*columns)
    if path is None:
        writer = csv.writer(sys.stdout, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)
        return
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)


def _curve(args, header, freqs, values):
    """CSV to --out (or stdout); with --json and no --out, JSON arrays."""
    if args.out is None and args.json:
        print(json.dumps(_jsonable({header[0]: freqs, header[1]: values})))
        return
    _write_columns(args.out, header, [[repr(float(f)) for f in freqs],
                                      [repr(float(v)) for v in values]])
    if args.out is not None:
        _emit(args, {"out": args.out, "rows": len(freqs)})


# ---- pqmf -------------------------------------------------------------------

def _bank_from_args(args):
    if getattr(args, "bank", None):
        return PqmfBank.from_json(args.bank)
    return design_bank(args.bands, args.taps, args.attenuation)


def cmd_pqmf_design(args):
    bank = design_bank(args.bands, args.taps, args.attenuation)
    if args.out:
        bank.to_json(args.out)
    result = {"bands": bank.num_bands, "taps": bank.taps, "cutoff": bank.cutoff,
              "attenuation_db": bank.attenuation_db, "certified_snr_db": bank.certified_snr_db}
    if args.out:
        result["out"] = args.out
    _emit(args, result)


def cmd_pqmf_roundtrip(args):
    bank = _bank_from_args(args)
    sig = read_wav(args.input, args.channel)
    n = len(sig) - len(sig) % bank.num_bands
    if n <= 2 * bank.taps:
        raise ValueError(f"need more than {2 * bank.taps} samples, got {len(sig)}")
    sig = sig.replace(sig.samples[:n])
    out = synthesize(bank, analyze(bank, sig))
    edge = bank.taps
    snr = snr_db(sig.samples[edge:-edge], out.samples[edge:-edge])
    _emit(args, {"bands": bank.num_bands, "taps": bank.taps, "samples": n, "snr_db": snr})


def cmd_pqmf_response(args):
    bank = _bank_from_args(args)
    if not 0 <= args.band < bank.num_bands:
        raise UsageError(f"--band must be in [0, {bank.num_bands})")
    freqs, db = band_frequency_response(bank, args.band, args.points)
    _curve(args, ["frequency_hz", "value"], freqs * args.rate, db)


# ---- degrade ----------------------------------------------------------------

def cmd_degrade(args):
    sig = read_wav(args.input, args.channel)
    config = DegradationConfig(args.cutoff, args.q, args.snr, args.seed, args.noise_reference)
    filtered, noise = degrade_components(sig, config)
    out = sig.replace(filtered + noise)
    write_wav(out, args.output, args.encoding)
    result = dict(asdict(config))
    result.update({"input": args.input, "output": args.output, "samples": len(out),
                   "sample_rate_hz": sig.sample_rate_hz,
                   "measured_snr_db": measured_snr_db(filtered, noise)})
    _emit(args, result)


# ---- analyze ----------------------------------------------------------------

def _pair(args):
    x = read_wav(args.reference, args.channel)
    y = read_wav(args.degraded, args.channel)
    if len(x) != len(y):
        raise ValueError(f"lengths differ: {len(x)} vs {len(y)} samples")
    return welch_cross(x, y, WelchConfig(args.segment, args.overlap))


def cmd_analyze_coherence(args):
    est = _pair(args)
    _curve(args, ["frequency_hz", "value"], est.frequencies_hz, coherence(est))


def cmd_analyze_transfer(args):
    est = _pair(args)
    with np.errstate(divide="ignore"):
        gain = 20.0 * np.log10(np.abs(transfer_function(est)))
    _curve(args, ["frequency_hz", "value"], est.frequencies_hz, gain)


def cmd_analyze_spectrogram(args):
    sig = read_wav(args.input, args.channel)
    times, freqs, s_db = spectrogram(sig, args.frame, args.hop, args.floor)
    meta = {"rows": int(s_db.shape[0]), "cols": int(s_db.shape[1]), "floor_db": args.floor,
            "frame": args.frame, "hop": args.hop, "sample_rate_hz": sig.sample_rate_hz}
    if args.out is None:
        if not args.json:
            raise UsageError("spectrogram needs --out unless --json is given")
        print(json.dumps(_jsonable({**meta, "times_s": times, "frequencies_hz": freqs,
                                    "values": s_db})))
        return
    if args.format == "csv":
        np.savetxt(args.out, s_db, delimiter=",", fmt="%.6f")
        meta["format"] = "csv"
    else:
        np.ascontiguousarray(s_db, dtype="<f4").tofile(args.out)
        meta["format"] = "f32le"
    sidecar = args.out + ".json"
    with open(sidecar, "w") as fh:
        json.dump(meta, fh)
    _emit(args, {"out": args.out, "sidecar": sidecar, **meta})


# ---- metric -----------------------------------------------------------------

def _metric_pair(args):
    ref = read_wav(args.reference, args.channel)
    est = read_wav(args.estimate, args.channel)
    if ref.sample_rate_hz != est.sample_rate_hz:
        raise ValueError("sample rates differ")
    if len(ref) != len(est):
        raise ValueError(f"lengths differ: {len(ref)} vs {len(est)} samples")
    return ref, est


def cmd_metric_si_sdr(args):
    _emit(args, {"metric": "si-sdr", "value": si_sdr(*_metric_pair(args))})


def cmd_metric_stoi(args):
    _emit(args, {"metric": "stoi", "value": stoi(*_metric_pair(args))})


def read_manifest(path):
    """Pairs from a CSV with header ``reference,estimate``.

    Relative paths are resolved against the manifest's directory.
    """
    base = Path(path).resolve().parent
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != ["reference", "estimate"]:
            raise ValueError(f"{path}: header must be 'reference,estimate', got {header}")
        pairs = []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 2:
                raise ValueError(f"{path}:{lineno}: expected 2 columns, got {len(row)}")
            pairs.append(tuple(str(base / p.strip()) for p in row))
    if not pairs:
        raise ValueError(f"{path}: no pairs")
    return pairs


def cmd_metric_batch(args):
    pairs = read_manifest(args.manifest)
    metrics = [m.strip() for m in args.metrics.split(",") if m.strip()]
    unknown = [m for m in metrics if m not in METRICS]
    if unknown:
        raise UsageError(f"unknown metrics {unknown}; choose from {list(METRICS)}")
    result = batch_evaluate(pairs, metrics, n_jobs=args.jobs)
    for r in result.rows:
        if not r.valid:
            logger.warning("%s / %s %s: %s", r.reference, r.estimate, r.name, r.detail)
    if args.out:
        result.to_csv(args.out)
    _emit(args, result.summary)
    if not all(r.valid for r in result.rows):
        raise PartialFailure("some pairs could not be evaluated")


# ---- model ------------------------------------------------------------------

def _model_setup(args):
    from .model import load_config
    from .model.config import DiscriminatorConfig, GeneratorConfig

    if args.config:
        gen, disc = load_config(args.config)
    else:
        gen, disc = GeneratorConfig(), DiscriminatorConfig()
    return gen, disc


def cmd_model_init(args):
    from .model import init_weights, model_param_shapes, zero_weights

    gen, disc = _model_setup(args)
    shapes = model_param_shapes(gen, disc)
    store = zero_weights(shapes) if args.zero else init_weights(shapes, seed=args.seed)
    store.save(args.out)
    _emit(args, {"out": args.out, "entries": len(store), "parameters": store.num_parameters()})


def _load_checked(args, gen, disc, generator_only):
    from .model import load_weights
    from .model.discriminator import discriminator_param_shapes
    from .model.generator import generator_param_shapes

    store = load_weights(args.weights)
    store.check_shapes(generator_param_shapes(gen))
    if not generator_only:
        store.check_shapes(discriminator_param_shapes(disc))
    return store


def _padded(sig, hop):
    return sig.replace(np.pad(sig.samples, (0, -len(sig) % hop)))


def cmd_model_enhance(args):
    from .model import generator_forward

    gen, disc = _model_setup(args)
    store = _load_checked(args, gen, disc, generator_only=True)
    sig = read_wav(args.input, args.channel)
    if len(sig) == 0:
        raise ValueError("input is empty")
    bank = design_bank(gen.num_bands)
    out = generator_forward(store, _padded(sig, gen.hop), gen, bank)
    out = out.replace(out.samples[:len(sig)])
    write_wav(out, args.output, args.encoding)
    _emit(args, {"input": args.input, "output": args.output, "samples": len(out)})


def cmd_model_losses(args):
    from .model.estimator import discriminate
    from .model.generator import generator_forward
    from .model.losses import (loss_discriminator, loss_generator_adv, loss_generator_rec,
                               loss_generator_total)

    gen, disc = _model_setup(args)
    store = _load_checked(args, gen, disc, generator_only=args.as_generated)
    ref = read_wav(args.reference, args.channel)
    other = read_wav(args.degraded, args.channel)
    if len(ref) != len(other):
        raise ValueError(f"lengths differ: {len(ref)} vs {len(other)} samples")
    if ref.sample_rate_hz != other.sample_rate_hz:
        raise ValueError("sample rates differ")
    bank = design_bank(gen.num_bands)
    ref = _padded(ref, gen.hop)
    other = _padded(other, gen.hop)
    fake_signal = other if args.as_generated else generator_forward(store, other, gen, bank)
    real = discriminate(store, ref, bank, gen, disc)
    fake = discriminate(store, fake_signal, bank, gen, disc)
    breakdown = loss_generator_total(loss_generator_adv(fake), loss_generator_rec(real, fake),
                                     args.lam, l_d=loss_discriminator(real, fake))
    _emit(args, breakdown.to_dict())


def cmd_model_info(args):
    from .model import count_parameters, load_weights, report_latency

    gen, disc = _model_setup(args)
    if args.weights:
        counts = count_parameters(load_weights(args.weights))
    else:
        counts = count_parameters(gen, disc)
    latency = report_latency(gen, design_bank(gen.num_bands), args.rate)
    _emit(args, {"parameters": counts, "latency": latency, "generator_config": gen.to_dict()})


# ---- parser -----------------------------------------------------------------

def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    # SUPPRESS keeps a leaf from resetting a flag given before the subcommand
    common.add_argument("--json", action="store_true", default=argparse.SUPPRESS,
                        help="emit one JSON document on stdout")
    common.add_argument("--channel", type=int, default=None,
                        help="channel to read from multichannel WAV input")

    parser = _Parser(prog="eben", description="PQMF bandwidth-extension toolkit")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--json", action="store_true", help="emit one JSON document on stdout")
    groups = parser.add_subparsers(dest="group", required=True, parser_class=_Parser)

    def leaf(sub, name, func, help_text):
        p = sub.add_parser(name, parents=[common], help=help_text)
        p.set_defaults(func=func)
        return p

    # pqmf
    pq = groups.add_parser("pqmf", help="filter bank design and checks").add_subparsers(
        dest="cmd", required=True, parser_class=_Parser)

    def bank_flags(p):
        p.add_argument("--bands", type=int, default=4)
        p.add_argument("--taps", type=int, default=None, help="prototype length (default 8 x bands)")
        p.add_argument("--attenuation", type=float, default=100.0, help="stopband target in dB")
        p.add_argument("--bank", default=None, help="bank JSON to load instead of designing")

    p = leaf(pq, "design", cmd_pqmf_design, "design a bank and write its JSON")
    bank_flags(p)
    p.add_argument("--out", default=None)
    p = leaf(pq, "roundtrip", cmd_pqmf_roundtrip, "analysis + synthesis SNR on a WAV file")
    bank_flags(p)
    p.add_argument("--in", dest="input", required=True)
    p = leaf(pq, "response", cmd_pqmf_response, "magnitude response of one band as CSV")
    bank_flags(p)
    p.add_argument("--band", type=int, default=0)
    p.add_argument("--points", type=int, default=512)
    p.add_argument("--rate", type=float, default=16000.0, help="sample rate for the frequency axis")
    p.add_argument("--out", default=None)

    # degrade
    p = groups.add_parser("degrade", parents=[common], help="simulate an in-ear recording")
    p.set_defaults(func=cmd_degrade)
    p.add_argument("input")
    p.add_argument("output")
    p.add_argument("--cutoff", type=float, default=600.0)
    p.add_argument("--q", type=float, default=1.0)
    p.add_argument("--snr", type=float, default=23.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--noise-reference", choices=("filtered", "clean"), default="filtered")
    p.add_argument("--encoding", choices=("float32", "pcm16"), default="float32")

    # analyze
    an = groups.add_parser("analyze", help="coherence, transfer function, spectrogram").add_subparsers(
        dest="cmd", required=True, parser_class=_Parser)
    for name, func in (("coherence", cmd_analyze_coherence), ("transfer", cmd_analyze_transfer)):
        p = leaf(an, name, func, f"Welch {name} of a (clean, device) pair")
        p.add_argument("reference")
        p.add_argument("degraded")
        p.add_argument("--segment", type=int, default=1024)
        p.add_argument("--overlap", type=float, default=0.5)
        p.add_argument("--out", default=None)
    p = leaf(an, "spectrogram", cmd_analyze_spectrogram, "dB magnitude spectrogram")
    p.add_argument("input")
    p.add_argument("--frame", type=int, default=512)
    p.add_argument("--hop", type=int, default=128)
    p.add_argument("--floor", type=float, default=-80.0)
    p.add_argument("--format", choices=("csv", "f32"), default="csv")
    p.add_argument("--out", default=None)

    # metric
    me = groups.add_parser("metric", help="objective speech metrics").add_subparsers(
        dest="cmd", required=True, parser_class=_Parser)
    for name, func in (("si-sdr", cmd_metric_si_sdr), ("stoi", cmd_metric_stoi)):
        p = leaf(me, name, func, f"{name} of one pair")
        p.add_argument("reference")
        p.add_argument("estimate")
    p = leaf(me, "batch", cmd_metric_batch, "metrics over a manifest CSV")
    p.add_argument("manifest")
    p.add_argument("--metrics", default=",".join(METRICS))
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--out", default=None, help="per-pair rows as CSV")

    # model
    mo = groups.add_parser("model", help="generator, discriminators, losses").add_subparsers(
        dest="cmd", required=True, parser_class=_Parser)

    def model_flags(p, weights_required):
        p.add_argument("--config", default=None, help="JSON with generator/discriminator fields")
        p.add_argument("--weights", required=weights_required, default=None)

    p = leaf(mo, "init", cmd_model_init, "write a seeded (or all-zero) weights file")
    model_flags(p, False)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--zero", action="store_true")
    p = leaf(mo, "enhance", cmd_model_enhance, "run the generator on a WAV file")
    model_flags(p, True)
    p.add_argument("input")
    p.add_argument("output")
    p.add_argument("--encoding", choices=("float32", "pcm16"), default="float32")
    p = leaf(mo, "losses", cmd_model_losses, "loss breakdown for a (reference, degraded) pair")
    model_flags(p, True)
    p.add_argument("reference")
    p.add_argument("degraded")
    p.add_argument("--lambda", dest="lam", type=float, default=100.0)
    p.add_argument("--as-generated", action="store_true",
                   help="treat the second file as generator output instead of enhancing it")
    p = leaf(mo, "info", cmd_model_info, "parameter counts and latency report")
    model_flags(p, False)
    p.add_argument("--rate", type=int, default=16000)
    return parser


def main(argv=None):
    logging.basicConfig(level=os.environ.get("EBEN_LOG_LEVEL", "WARNING").upper(),
                        stream=sys.stderr, format="%(levelname)s %(name)s: %(message)s")
    try:
        args = build_parser().parse_args(argv)
        for name in ("taps", "points", "segment", "frame", "hop", "jobs", "bands"):
            value = getattr(args, name, None)
            if value is not None and value <= 0:
                raise UsageError(f"--{name} must be positive")
        args.func(args)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:  # --help / --version
        return EXIT_OK if exc.code in (0, None) else EXIT_USAGE
    except (EbenError, OSError, ValueError, KeyError, PartialFailure) as exc:
        print(f"eben: error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except Exception as exc:
        logger.debug("internal error", exc_info=True)
        print(f"eben: internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    return EXIT_OK


def main_exit():
    sys.exit(main())


if __name__ == "__main__":
    main_exit()
