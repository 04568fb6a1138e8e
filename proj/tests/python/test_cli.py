"""Black-box tests for the command-line binary (exit codes, formats)."""

import os
import subprocess

import pytest

BIN = os.environ.get("RINGDPS_BIN")

pytestmark = pytest.mark.skipif(
    not BIN, reason="RINGDPS_BIN not set (binary not built in this environment)"
)


def run(*args, **kwargs):
    return subprocess.run(
        [BIN, *args], capture_output=True, text=True, timeout=120, **kwargs
    )


def strip_timestamp(text):
    return "\n".join(
        line for line in text.splitlines() if not line.startswith("# timestamp")
    )


def test_help_and_usage():
    assert run("--help").returncode == 0
    assert run().returncode == 1
    assert run("simulate").returncode == 1  # config argument is required


def test_missing_config_file():
    proc = run("simulate", "/no/such/config.json")
    assert proc.returncode == 2
    assert "cannot open" in proc.stderr


def test_syntax_error(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{oops")
    proc = run("simulate", str(bad))
    assert proc.returncode == 3


def test_unknown_key_strict_vs_lenient(tmp_path):
    config = tmp_path / "extra.json"
    config.write_text('{"type": "scenario", "spad": {"darkness": 1}}')
    strict = run("simulate", str(config), "--strict")
    assert strict.returncode == 4
    assert "spad.darkness" in strict.stderr

    lenient = run("simulate", str(config))
    assert lenient.returncode == 0
    assert "spad.darkness" in lenient.stderr
    assert "ignored" in lenient.stderr


def test_invariant_violation(tmp_path):
    config = tmp_path / "invalid.json"
    config.write_text('{"type": "scenario", "spad": {"eta": 1.5}}')
    proc = run("simulate", str(config))
    assert proc.returncode == 5
    assert "spad.eta" in proc.stderr


def test_simulate_preset_to_stdout():
    proc = run("simulate", "paper_keyrate")
    assert proc.returncode == 0
    lines = proc.stdout.splitlines()
    assert lines[0] == "# ringdps 1.0.0"
    assert lines[1] == "# schema result-v1"
    header = [l for l in lines if not l.startswith("#")][0]
    assert header == (
        "value,qber,qber_sigma,raw_rate_cps,secure_bits_per_symbol,mode,seed,status"
    )
    row = [l for l in lines if not l.startswith("#")][1]
    assert row.split(",")[5] == "analytic"
    assert row.endswith("ok")


def test_simulate_wrong_command_for_sweep():
    proc = run("simulate", "paper_fig2c")
    assert proc.returncode == 5
    assert "sweep" in proc.stderr


def test_sweep_preset():
    proc = run("sweep", "paper_fig2c")
    assert proc.returncode == 0
    rows = [l for l in proc.stdout.splitlines() if not l.startswith("#")][1:]
    assert len(rows) == 21
    qbers = [float(r.split(",")[1]) for r in rows]
    assert qbers == sorted(qbers, reverse=True)


def test_deterministic_output_files(tmp_path):
    config = tmp_path / "mc.json"
    config.write_text(
        """{
          "type": "scenario",
          "link": {"total_loss_db": 12.0},
          "mode": "monte_carlo",
          "frame_length": 32768,
          "oversampling": 16,
          "seed": 5
        }"""
    )
    a = tmp_path / "a.csv"
    b = tmp_path / "b.csv"
    assert run("simulate", str(config), "--out", str(a)).returncode == 0
    assert run("simulate", str(config), "--out", str(b)).returncode == 0
    assert strip_timestamp(a.read_text()) == strip_timestamp(b.read_text())
    assert a.read_text().startswith("# ringdps")


def test_seed_override_changes_sampled_rows(tmp_path):
    config = tmp_path / "mc.json"
    config.write_text(
        '{"type": "scenario", "link": {"total_loss_db": 12.0},'
        ' "mode": "monte_carlo", "frame_length": 32768, "oversampling": 16}'
    )
    base = run("simulate", str(config))
    other = run("simulate", str(config), "--seed", "99")
    assert base.returncode == 0 and other.returncode == 0
    assert strip_timestamp(base.stdout) != strip_timestamp(other.stdout)
    assert ",99," in other.stdout


def test_out_dir_env_var(tmp_path):
    env = dict(os.environ, RINGDPS_OUT_DIR=str(tmp_path))
    proc = subprocess.run(
        [BIN, "simulate", "paper_keyrate", "--out", "result.csv"],
        capture_output=True,
        text=True,
        timeout=120,
        env=env,
    )
    assert proc.returncode == 0
    assert (tmp_path / "result.csv").exists()


def test_respond_grid():
    proc = run("respond", "paper_keyrate", "--from", "-5", "--to", "5", "--step", "0.1")
    assert proc.returncode == 0
    lines = proc.stdout.splitlines()
    assert lines[0] == "detuning_ghz,transmission_db"
    assert len(lines) == 1 + 101
    # deep notch at zero detuning
    mid = dict(l.split(",", 1) for l in lines[1:])
    assert float(mid["0"]) < float(mid["5"]) - 20.0


def test_fit_round_trip(tmp_path):
    spectrum = tmp_path / "spectrum.csv"
    proc = run(
        "respond",
        "paper_keyrate",
        "--from",
        "-60",
        "--to",
        "60",
        "--step",
        "0.05",
        "--out",
        str(spectrum),
    )
    assert proc.returncode == 0
    fit = run("fit", str(spectrum))
    assert fit.returncode == 0
    report = dict(l.split("=", 1) for l in fit.stdout.splitlines())
    assert float(report["fwhm_ghz"]) == pytest.approx(1.3, rel=0.02)
    assert float(report["extinction_db"]) == pytest.approx(23.7, rel=0.02)
    assert float(report["rms_residual_db"]) < 0.1


def test_fit_rejects_flat_spectrum(tmp_path):
    flat = tmp_path / "flat.csv"
    flat.write_text(
        "detuning_ghz,transmission_db\n"
        + "".join(f"{f * 0.1:.1f},-16.7\n" for f in range(-50, 51))
    )
    proc = run("fit", str(flat))
    assert proc.returncode == 7


def test_keyrate_report():
    proc = run("keyrate", "--qber", "0.013", "--loss", "26.6")
    assert proc.returncode == 0
    report = dict(l.split("=", 1) for l in proc.stdout.splitlines())
    assert float(report["secure_bits_per_symbol"]) == pytest.approx(1.5009e-5, rel=1e-3)
    assert float(report["channel_budget_db"]) == pytest.approx(9.9, abs=1e-9)
    assert float(report["secure_fraction"]) > 0.0

    assert run("keyrate", "--qber", "0.013").returncode == 1  # --loss required


def test_presets_listing_and_export(tmp_path):
    listing = run("presets")
    assert listing.returncode == 0
    names = listing.stdout.split()
    assert names == [
        "paper_bicmos",
        "paper_colorless",
        "paper_fig2c",
        "paper_fig4b",
        "paper_keyrate",
    ]

    export = run("presets", "--dir", str(tmp_path))
    assert export.returncode == 0
    for name in names:
        path = tmp_path / f"{name}.json"
        assert path.exists()
        proc = run("sweep" if "fig" in name or "colorless" in name else "simulate",
                   str(path), "--mode", "analytic")
        assert proc.returncode == 0
