import csv
import io
import json
import subprocess
import sys

import numpy as np
import pytest

from eben.cli import main
from eben.datasets import make_speech_like
from eben.degrade import DegradationConfig, degradation_response, degrade
from eben.model import count_parameters, model_param_shapes, save_weights, zero_weights
from eben.pqmf import PqmfBank, design_bank
from eben.signal import Signal, read_wav, write_wav

FS = 16000


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out = capsys.readouterr().out
    return code, out


def run_json(capsys, *argv):
    code, out = run(capsys, "--json", *argv)
    assert code == 0, out
    return json.loads(out)


@pytest.fixture(scope="module")
def files(tmp_path_factory):
    root = tmp_path_factory.mktemp("wav")
    speech = make_speech_like(3.0, seed=4)
    write_wav(speech, root / "speech.wav", "float32")
    noise = Signal(0.1 * np.random.default_rng(0).standard_normal(10 * FS), FS)
    write_wav(noise, root / "white.wav", "float32")
    write_wav(Signal(np.zeros(0), FS), root / "empty.wav", "float32")
    (root / "truncated.wav").write_bytes((root / "speech.wav").read_bytes()[:2000])
    return root


def test_version_and_help(capsys):
    code, out = run(capsys, "--version")
    assert code == 0 and "0.1.0" in out
    code, out = run(capsys, "--help")
    assert code == 0 and "degrade" in out


def test_pqmf_roundtrip(capsys, files):
    result = run_json(capsys, "pqmf", "roundtrip", "--in", files / "speech.wav")
    assert result["snr_db"] >= 35.0 and result["bands"] == 4


def test_pqmf_design_roundtrips_kernels(capsys, tmp_path):
    result = run_json(capsys, "pqmf", "design", "--bands", 4, "--out", tmp_path / "bank.json")
    assert result["taps"] == 32
    loaded = PqmfBank.from_json(tmp_path / "bank.json")
    fresh = design_bank(4)
    assert np.array_equal(loaded.analysis_kernels, fresh.analysis_kernels)
    assert np.array_equal(loaded.synthesis_kernels, fresh.synthesis_kernels)


def test_pqmf_response_csv(capsys, tmp_path):
    code, _ = run(capsys, "pqmf", "response", "--band", 2, "--out", tmp_path / "r.csv")
    assert code == 0
    rows = list(csv.reader(open(tmp_path / "r.csv")))
    assert rows[0] == ["frequency_hz", "value"] and len(rows) == 513
    code, out = run(capsys, "pqmf", "response")
    assert code == 0 and len(out.strip().splitlines()) == 513
    assert run(capsys, "pqmf", "response", "--band", 4)[0] == 1


def test_degrade_snr_and_determinism(capsys, files, tmp_path):
    a = run_json(capsys, "degrade", files / "speech.wav", tmp_path / "a.wav", "--seed", 3)
    run_json(capsys, "degrade", files / "speech.wav", tmp_path / "b.wav", "--seed", 3)
    assert abs(a["measured_snr_db"] - 23.0) <= 0.5
    assert (tmp_path / "a.wav").read_bytes() == (tmp_path / "b.wav").read_bytes()
    direct = degrade(read_wav(files / "speech.wav"), DegradationConfig(seed=3))
    assert np.array_equal(read_wav(tmp_path / "a.wav").samples,
                          direct.samples.astype(np.float32).astype(np.float64))


def test_degrade_empty_input_is_data_error(capsys, files, tmp_path):
    assert run(capsys, "degrade", files / "empty.wav", tmp_path / "o.wav")[0] == 2


def test_coherence_self(capsys, files):
    result = run_json(capsys, "analyze", "coherence", files / "white.wav", files / "white.wav")
    gamma = np.array(result["value"], dtype=float)
    assert np.nanmin(gamma) >= 0.999


def test_transfer_matches_analytic(capsys, files, tmp_path):
    run(capsys, "degrade", files / "white.wav", tmp_path / "d.wav", "--snr", 120)
    result = run_json(capsys, "analyze", "transfer", files / "white.wav", tmp_path / "d.wav")
    freqs = np.array(result["frequency_hz"])
    gain = np.array(result["value"], dtype=float)
    _, analytic = degradation_response(DegradationConfig(), FS, n_points=len(freqs))
    band = (freqs >= 50) & (freqs <= 4000)
    assert np.max(np.abs(gain[band] - analytic[band])) <= 1.0


def test_spectrogram_outputs(capsys, files, tmp_path):
    out = tmp_path / "s.csv"
    code, _ = run(capsys, "analyze", "spectrogram", files / "speech.wav", "--out", out)
    assert code == 0
    meta = json.loads((tmp_path / "s.csv.json").read_text())
    values = np.loadtxt(out, delimiter=",")
    assert values.shape == (meta["rows"], meta["cols"]) and meta["cols"] == 257
    assert values.min() >= -80.0 and values.max() <= 0.0

    run(capsys, "degrade", files / "speech.wav", tmp_path / "d.wav", "--snr", 23)
    run(capsys, "analyze", "spectrogram", tmp_path / "d.wav", "--out", tmp_path / "d.f32", "--format", "f32")
    dmeta = json.loads((tmp_path / "d.f32.json").read_text())
    deg = np.fromfile(tmp_path / "d.f32", "<f4").reshape(dmeta["rows"], dmeta["cols"])
    freqs = np.arange(dmeta["cols"]) * FS / 512
    power = 10 ** (deg.astype(float) / 10)
    drop = 10 * np.log10(power[:, freqs < 600].mean() / power[:, freqs > 2000].mean())
    assert drop >= 30.0

    result = run_json(capsys, "analyze", "spectrogram", files / "speech.wav")
    assert np.array(result["values"]).shape == (result["rows"], result["cols"])
    assert run(capsys, "analyze", "spectrogram", files / "speech.wav")[0] == 1


def test_metrics_single(capsys, files, tmp_path):
    assert run_json(capsys, "metric", "si-sdr", files / "speech.wav", files / "speech.wav")["value"] == 100.0
    assert run_json(capsys, "metric", "stoi", files / "speech.wav", files / "speech.wav")["value"] == pytest.approx(1.0)
    write_wav(Signal(np.zeros(100), FS), tmp_path / "short.wav", "float32")
    assert run(capsys, "metric", "si-sdr", files / "speech.wav", tmp_path / "short.wav")[0] == 2


def test_stoi_against_frozen_oracle(capsys, tmp_path):
    from data.make_stoi_oracle import fixture_pairs
    from conftest import DATA

    oracle = json.loads((DATA / "stoi_oracle.json").read_text())["values"]
    name, clean, noisy = next(iter(fixture_pairs()))
    write_wav(Signal(clean, FS), tmp_path / "c.wav", "float32")
    write_wav(Signal(noisy, FS), tmp_path / "n.wav", "float32")
    value = run_json(capsys, "metric", "stoi", tmp_path / "c.wav", tmp_path / "n.wav")["value"]
    assert abs(value - oracle[name]) <= 0.02


def test_metric_batch(capsys, files, tmp_path):
    manifest = tmp_path / "m.csv"
    manifest.write_text(f"reference,estimate\n{files / 'speech.wav'},{files / 'speech.wav'}\n")
    summary = run_json(capsys, "metric", "batch", manifest, "--out", tmp_path / "rows.csv")
    assert set(summary) == {"si-sdr", "stoi"}
    assert summary["si-sdr"] == {"median": 100.0, "iqr": 0.0, "n": 1}
    assert (tmp_path / "rows.csv").exists()
    manifest.write_text(f"reference,estimate\n{files / 'speech.wav'},missing.wav\n")
    assert run(capsys, "metric", "batch", manifest)[0] == 2
    manifest.write_text("a,b\nx,y\n")
    assert run(capsys, "metric", "batch", manifest)[0] == 2
    assert run(capsys, "metric", "batch", manifest, "--metrics", "pesq")[0] in (1, 2)


def test_model_zero_weights(capsys, files, tmp_path):
    weights = tmp_path / "zero.bin"
    save_weights(zero_weights(model_param_shapes()), weights)
    result = run_json(capsys, "model", "enhance", "--weights", weights, files / "speech.wav", tmp_path / "e.wav")
    enhanced = read_wav(tmp_path / "e.wav")
    assert len(enhanced) == len(read_wav(files / "speech.wav")) == result["samples"]
    assert not enhanced.samples.any()
    losses = run_json(capsys, "model", "losses", "--weights", weights, "--as-generated",
                      files / "speech.wav", files / "speech.wav")
    assert losses["l_g_rec"] == 0.0 and losses["l_d"] == 2.0 and losses["l_g_adv"] == 1.0


def test_model_init_and_info(capsys, tmp_path):
    result = run_json(capsys, "model", "init", "--out", tmp_path / "w.bin", "--seed", 1)
    assert result["parameters"] == count_parameters()["total"]
    info = run_json(capsys, "model", "info", "--weights", tmp_path / "w.bin")
    assert 0.5e6 <= info["parameters"]["generator"] <= 5e6
    assert info["latency"]["lookahead_samples"] == 6559
    assert run_json(capsys, "model", "info")["parameters"] == info["parameters"]


def test_corrupt_weights_and_mismatched_config(capsys, files, tmp_path):
    weights = tmp_path / "w.bin"
    run(capsys, "model", "init", "--out", weights, "--zero")
    raw = bytearray(weights.read_bytes())
    raw[100] ^= 0xFF
    (tmp_path / "bad.bin").write_bytes(bytes(raw))
    (tmp_path / "cut.bin").write_bytes(bytes(raw[:500]))
    for bad in ("bad.bin", "cut.bin"):
        assert run(capsys, "model", "enhance", "--weights", tmp_path / bad, files / "speech.wav",
                   tmp_path / "o.wav")[0] == 2
    (tmp_path / "c.json").write_text('{"generator": {"base_channels": 16}}')
    code = main(["model", "enhance", "--weights", str(weights), "--config", str(tmp_path / "c.json"),
                 str(files / "speech.wav"), str(tmp_path / "o.wav")])
    captured = capsys.readouterr()
    assert code == 2 and "generator." in captured.err


def test_json_position_and_single_document(capsys, files):
    a = run(capsys, "--json", "metric", "si-sdr", files / "speech.wav", files / "speech.wav")[1]
    b = run(capsys, "metric", "si-sdr", files / "speech.wav", files / "speech.wav", "--json")[1]
    assert json.loads(a) == json.loads(b)
    text = run(capsys, "metric", "si-sdr", files / "speech.wav", files / "speech.wav")[1]
    assert "si-sdr" in text and not text.lstrip().startswith("{")


def test_exit_codes(capsys, files, tmp_path):
    assert run(capsys, "nonsense")[0] == 1
    assert run(capsys, "degrade")[0] == 1
    assert run(capsys, "pqmf", "design", "--bands", 0)[0] == 1
    assert run(capsys, "degrade", tmp_path / "missing.wav", tmp_path / "o.wav")[0] == 2
    assert run(capsys, "degrade", files / "truncated.wav", tmp_path / "o.wav")[0] == 2
    (tmp_path / "junk.wav").write_bytes(b"not a wave file at all")
    assert run(capsys, "metric", "stoi", tmp_path / "junk.wav", files / "speech.wav")[0] == 2


def test_module_entry_point(files):
    proc = subprocess.run([sys.executable, "-m", "eben", "--json", "metric", "si-sdr",
                           str(files / "speech.wav"), str(files / "speech.wav")],
                          capture_output=True, text=True)
    assert proc.returncode == 0 and json.loads(proc.stdout)["value"] == 100.0
    proc = subprocess.run([sys.executable, "-m", "eben", "bogus"], capture_output=True, text=True)
    assert proc.returncode == 1 and proc.stderr
