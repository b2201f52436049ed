"""Acceptance criteria, one test each.

Every test records a PASS/FAIL line (printed immediately and again in the
terminal summary) before asserting, so a failing criterion still reports
its measured values.
"""
import json
import time

import numpy as np
import pytest
import scipy.signal

from conftest import DATA
from acceptance_log import record
from oracles import generator_oracle, naive_loss_adv, naive_loss_d, naive_loss_rec
from eben.datasets import make_speech_like
from eben.degrade import DegradationConfig, degrade, degrade_components, design_lowpass_biquad, filtfilt, measured_snr_db
from eben.metrics import batch_evaluate, si_sdr, stoi
from eben.model import (
    DiscriminatorOutput,
    GeneratorConfig,
    WeightStore,
    compute_losses,
    count_parameters,
    generator_forward,
    init_weights,
    load_weights,
    loss_discriminator,
    loss_generator_adv,
    loss_generator_rec,
    model_param_shapes,
    report_latency,
    save_weights,
    zero_weights,
)
from eben.model import estimator as estimator_module
from eben.model.generator import generator_param_shapes
from eben.model.info import pipeline_graph
from eben.pqmf import analyze, design_bank, synthesize
from eben.signal import Signal, read_wav, write_wav
from eben.spectral import coherence, welch_cross

FS = 16000


def snr_db(ref, est):
    return 10 * np.log10(np.sum(ref ** 2) / np.sum((ref - est) ** 2))


def sig(x):
    return Signal(x, FS)


def test_criterion_01_pqmf_reconstruction():
    start = time.perf_counter()
    worst = {}
    for m in (2, 4, 8):
        bank = design_bank(m, 8 * m)
        rng = np.random.default_rng(m)
        snrs = []
        for _ in range(50):
            x = rng.standard_normal(4096)
            y = synthesize(bank, analyze(bank, sig(x))).samples
            edge = bank.taps
            snrs.append(snr_db(x[edge:-edge], y[edge:-edge]))
        worst[m] = min(snrs)
    elapsed = time.perf_counter() - start
    ok = all(v >= 35.0 for v in worst.values()) and elapsed < 30
    detail = ", ".join(f"M={m} min {v:.1f} dB" for m, v in worst.items()) + f"; {elapsed:.1f} s"
    record(1, "PQMF reconstruction >= 35 dB", ok, detail)
    assert ok, detail


def test_criterion_02_degradation_filter():
    start = time.perf_counter()
    biquad = design_lowpass_biquad(600.0, 1.0, FS)
    n = 4 * FS
    mid = slice(FS, 3 * FS)
    dc = filtfilt(biquad, sig(np.ones(n))).samples[mid]
    dc_db = 20 * np.log10(np.mean(dc))
    t = np.arange(n) / FS
    tone = np.sin(2 * np.pi * 1200 * t)
    out = filtfilt(biquad, sig(tone)).samples
    basis = np.stack([np.sin(2 * np.pi * 1200 * t[mid]), np.cos(2 * np.pi * 1200 * t[mid])], axis=1)
    coef, *_ = np.linalg.lstsq(basis, out[mid], rcond=None)
    gain_1200 = 20 * np.log10(np.hypot(*coef))
    phase_1200 = np.degrees(np.arctan2(coef[1], coef[0]))
    rng = np.random.default_rng(0)
    lags = []
    for _ in range(20):
        x = rng.standard_normal(8192)
        y = filtfilt(biquad, sig(x)).samples
        corr = scipy.signal.correlate(y, x, mode="full")
        lags.append(int(np.argmax(corr)) - (len(x) - 1))
    elapsed = time.perf_counter() - start
    ok = (abs(dc_db) <= 0.01 and abs(gain_1200 + 22.2) <= 2.0 and all(lag == 0 for lag in lags)
          and abs(phase_1200) < 1e-3 and elapsed < 10)
    detail = (f"DC {dc_db:+.4f} dB, 1200 Hz {gain_1200:.2f} dB (phase {phase_1200:.1e} deg), "
              f"lag-0 peaks {sum(lag == 0 for lag in lags)}/20; {elapsed:.2f} s")
    record(2, "degradation filter response", ok, detail)
    assert ok, detail


def test_criterion_03_noise_calibration(speech_10s):
    start = time.perf_counter()
    assert speech_10s.duration_s >= 10.0
    filtered, noise = degrade_components(speech_10s, DegradationConfig())
    measured = measured_snr_db(filtered, noise)
    elapsed = time.perf_counter() - start
    ok = abs(measured - 23.0) <= 0.5 and elapsed < 5
    detail = f"measured {measured:.3f} dB on {speech_10s.duration_s:.0f} s; {elapsed:.2f} s"
    record(3, "noise calibration 23 +/- 0.5 dB", ok, detail)
    assert ok, detail


def test_criterion_04_coherence(speech_10s):
    start = time.perf_counter()
    est = welch_cross(speech_10s, degrade(speech_10s, DegradationConfig()))
    gamma = coherence(est)
    f = est.frequencies_hz
    # bins below 400 Hz where the clean signal carries energy
    active = (f <= 400) & (est.pxx >= 0.01 * est.pxx.max())
    low = float(np.nanmin(gamma[active]))
    high = float(np.nanmax(gamma[f > 3000]))
    elapsed = time.perf_counter() - start
    ok = est.n_segments >= 30 and low >= 0.95 and high <= 0.2 and elapsed < 10
    detail = (f"min below 400 Hz {low:.4f} over {int(active.sum())} active bins, max above 3 kHz "
              f"{high:.4f}, {est.n_segments} segments; {elapsed:.2f} s")
    record(4, "coherence shape", ok, detail)
    assert ok, detail


def test_criterion_05_si_sdr_closed_forms():
    rng = np.random.default_rng(5)
    ref = rng.standard_normal(16000)
    est = ref + 0.3 * rng.standard_normal(16000)
    base = si_sdr(sig(ref), sig(est))
    scales = 10 ** rng.uniform(-3, 3, 100) * rng.choice([-1, 1], 100)
    worst = max(abs(si_sdr(sig(ref), sig(a * est)) - base) for a in scales)
    noise = rng.standard_normal(16000)
    noise -= noise @ ref / (ref @ ref) * ref
    noise *= np.linalg.norm(ref) / np.linalg.norm(noise) * 10 ** (-20 / 20)
    constructed = si_sdr(sig(ref), sig(ref + noise))
    ok = worst <= 1e-9 and abs(constructed - 20.0) <= 1e-6
    detail = f"max scaling drift {worst:.1e} dB, orthogonal construction {constructed:.9f} dB"
    record(5, "SI-SDR closed forms", ok, detail)
    assert ok, detail


def test_criterion_06_stoi_oracle():
    from data.make_stoi_oracle import fixture_pairs

    pinned = json.loads((DATA / "stoi_oracle.json").read_text())
    values = pinned["values"]
    errors = [abs(stoi(sig(ref), sig(est)) - values[name]) for name, ref, est in fixture_pairs()]
    x = make_speech_like(3.0, seed=42)
    self_score = stoi(x, x)
    ok = len(errors) == 20 and max(errors) <= 0.02 and abs(self_score - 1.0) <= 1e-9
    detail = (f"max |diff| {max(errors):.2e} vs {pinned['source']} on {len(errors)} clips, "
              f"stoi(x, x) - 1 = {self_score - 1:.1e}")
    record(6, "STOI oracle agreement", ok, detail)
    assert ok, detail


def test_criterion_07_untrained_baseline(tmp_path):
    start = time.perf_counter()
    pairs = []
    for i in range(10):
        clean = make_speech_like(10.0, seed=i)
        write_wav(clean, tmp_path / f"ref{i}.wav", "float32")
        write_wav(degrade(clean, DegradationConfig(seed=i)), tmp_path / f"deg{i}.wav", "float32")
        pairs.append((tmp_path / f"ref{i}.wav", tmp_path / f"deg{i}.wav"))
    summary = batch_evaluate(pairs, ("stoi", "si-sdr")).summary
    elapsed = time.perf_counter() - start
    med_stoi, med_sdr = summary["stoi"]["median"], summary["si-sdr"]["median"]
    ok = (summary["stoi"]["n"] == 10 and 0.75 <= med_stoi <= 0.90 and 4.0 <= med_sdr <= 13.0
          and elapsed < 60)
    detail = (f"median STOI {med_stoi:.3f} (IQR {summary['stoi']['iqr']:.3f}), median SI-SDR "
              f"{med_sdr:.2f} dB (IQR {summary['si-sdr']['iqr']:.2f}) over 10 clips; {elapsed:.1f} s")
    record(7, "untrained baseline row", ok, detail)
    assert ok, detail


def _random_outputs(rng):
    real, fake = [], []
    for _ in range(4):
        shapes = [(int(rng.integers(1, 6)), int(rng.integers(1, 12))) for _ in range(int(rng.integers(1, 5)))]
        shapes.append((1, int(rng.integers(1, 12))))
        real.append(DiscriminatorOutput([rng.normal(0, 1.5, s) for s in shapes]))
        fake.append(DiscriminatorOutput([rng.normal(0, 1.5, s) for s in shapes]))
    return real, fake


def _constant(value):
    return [DiscriminatorOutput([np.full((3, 5), value) for _ in range(n - 1)] + [np.full((1, 5), value)])
            for n in (7, 6, 6, 6)]


def test_criterion_08_loss_oracles():
    rng = np.random.default_rng(8)
    worst = 0.0
    for _ in range(200):
        real, fake = _random_outputs(rng)
        rl, fl = [o.logits for o in real], [o.logits for o in fake]
        worst = max(worst,
                    abs(loss_discriminator(real, fake) - naive_loss_d(rl, fl)),
                    abs(loss_generator_adv(fake) - naive_loss_adv(fl)),
                    abs(loss_generator_rec(real, fake) - naive_loss_rec([o.features for o in real],
                                                                       [o.features for o in fake])))
    saturation = {
        "L_D=0": loss_discriminator(_constant(1.0), _constant(-1.0)) == 0.0,
        "L_D=2": loss_discriminator(_constant(0.0), _constant(0.0)) == 2.0,
        "adv=0": loss_generator_adv(_constant(1.0)) == 0.0,
        "adv=1": loss_generator_adv(_constant(0.0)) == 1.0,
        "rec offset": loss_generator_rec(_constant(0.0), _constant(1.0)) == (6 + 5 + 5 + 5) / 4,
    }
    ok = worst <= 1e-10 and all(saturation.values())
    detail = f"max |diff| {worst:.1e} over 200 cases; saturation " + ", ".join(
        f"{k} {'ok' if v else 'BAD'}" for k, v in saturation.items())
    record(8, "loss oracle equivalence", ok, detail)
    assert ok, detail


def test_criterion_09_architecture_contracts(bank4, monkeypatch):
    config = GeneratorConfig()
    weights = init_weights(model_param_shapes(), seed=9)
    lengths = [256 * k for k in range(1, 21)]
    rng = np.random.default_rng(9)
    lengths_ok = all(len(generator_forward(weights, sig(rng.standard_normal(n)), config, bank4)) == n
                     for n in lengths)

    seen = {}
    real_forward = estimator_module.discriminator_forward

    def spy(w, x, scale, cfg):
        seen.setdefault(scale, []).append(np.array(x, copy=True))
        return real_forward(w, x, scale, cfg)

    monkeypatch.setattr(estimator_module, "discriminator_forward", spy)
    y, x = sig(rng.standard_normal(2048)), sig(rng.standard_normal(2048))
    _, enhanced = compute_losses(weights, y, x, bank=bank4)
    monkeypatch.undo()
    routing_ok = True
    for call, source in enumerate((y, enhanced)):
        bands = analyze(bank4, source).bands
        for k in (1, 2, 3):
            got = seen[k][call]
            routing_ok &= np.array_equal(got, bands[k]) and not np.allclose(got, bands[0])
        routing_ok &= np.array_equal(seen[0][call], source.samples)

    zero = generator_forward(zero_weights(generator_param_shapes(config)), sig(rng.standard_normal(4096)),
                             config, bank4).samples
    zeros_ok = not zero.any()

    probe = rng.standard_normal(512)
    got = generator_forward(weights, sig(probe), config, bank4).samples
    oracle_diff = float(np.max(np.abs(got - generator_oracle(weights, probe, bank4.prototype))))

    ok = lengths_ok and routing_ok and zeros_ok and oracle_diff <= 1e-6
    detail = (f"20 lengths {'ok' if lengths_ok else 'BAD'}, routing {'ok' if routing_ok else 'BAD'}, "
              f"zero weights {'ok' if zeros_ok else 'BAD'}, oracle max |diff| {oracle_diff:.1e}")
    record(9, "architecture contracts", ok, detail)
    assert ok, detail


def test_criterion_10_parameters_and_latency(bank4):
    counts = count_parameters()
    latency = report_latency(GeneratorConfig(), bank4, FS)
    pinned = (counts["generator"] == 2_951_268
              and counts["discriminator_per_scale"] == [18_862_913, 8_113_985, 8_113_985, 8_113_985]
              and latency["lookahead_samples"] == 6559 and latency["receptive_field_samples"] == 12908)
    in_range = 0.5e6 <= counts["generator"] <= 5e6

    # impulse probe: positive weights and zero biases, so nothing cancels
    config = GeneratorConfig()
    graph = pipeline_graph(config, bank4)
    rng = np.random.default_rng(0)
    store = WeightStore((n, np.zeros(s) if n.endswith(".bias") else rng.uniform(0.01, 0.02, s))
                        for n, s in graph.params())
    length = 64 * config.hop
    matches = 0
    probes = [length // 2 + p for p in (0, 1, 77, 255)]
    worst_lookahead = 0
    for j in probes:
        x = np.zeros((1, length))
        x[0, j] = 1.0
        reached = np.nonzero(graph.forward(x, store)[0])[0]
        matches += (reached.min(), reached.max()) == graph.influence((j, j))
        worst_lookahead = max(worst_lookahead, j - reached.min())
    ok = pinned and in_range and matches == len(probes)
    detail = (f"generator {counts['generator']:,} params, discriminators {counts['discriminators']:,}, "
              f"lookahead {latency['lookahead_samples']} samples ({latency['lookahead_ms']:.2f} ms), "
              f"receptive field {latency['receptive_field_samples']}; impulse probe matches "
              f"{matches}/{len(probes)} (max observed lookahead {worst_lookahead})")
    record(10, "parameter count and latency", ok, detail)
    assert ok, detail


def test_criterion_11_bit_exactness(tmp_path, speech_10s):
    store = init_weights(model_param_shapes(), seed=11)
    save_weights(store, tmp_path / "a.bin")
    save_weights(load_weights(tmp_path / "a.bin"), tmp_path / "b.bin")
    weights_ok = (tmp_path / "a.bin").read_bytes() == (tmp_path / "b.bin").read_bytes()

    write_wav(speech_10s, tmp_path / "a.wav", "float32")
    reread = read_wav(tmp_path / "a.wav")
    write_wav(reread, tmp_path / "b.wav", "float32")
    wav_ok = ((tmp_path / "a.wav").read_bytes() == (tmp_path / "b.wav").read_bytes()
              and reread.samples.astype("<f4").tobytes() == speech_10s.samples.astype("<f4").tobytes())

    first = degrade(speech_10s, DegradationConfig(seed=17)).samples.tobytes()
    second = degrade(speech_10s, DegradationConfig(seed=17)).samples.tobytes()
    degrade_ok = first == second

    ok = weights_ok and wav_ok and degrade_ok
    detail = (f"weights {'identical' if weights_ok else 'DIFFER'}, float32 WAV "
              f"{'identical' if wav_ok else 'DIFFER'}, seeded degrade {'identical' if degrade_ok else 'DIFFER'}")
    record(11, "bit-exact round trips", ok, detail)
    assert ok, detail
