import hashlib
import json
import shutil
import subprocess
import warnings

import numpy as np
import pytest

from rtnlab import bitgen as bg
from rtnlab import cli
from rtnlab import config as cf
from rtnlab.errors import ConfigError


def run_cli(*argv):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return cli.main([str(a) for a in argv])


@pytest.fixture(scope="module")
def short_cfg(tmp_path_factory):
    """A 60-second differential run: enough bits for the bit-side commands."""
    path = tmp_path_factory.mktemp("cfg") / "short.cfg"
    path.write_text("run.duration = 60.0\nseed = 3\nanalysis.entropy_block = 1\n")
    return path


@pytest.fixture(scope="module")
def harvest_dir(short_cfg, tmp_path_factory):
    out = tmp_path_factory.mktemp("harvest")
    assert run_cli("harvest", "--config", short_cfg, "--out", out) == cli.EXIT_OK
    return out


# ---------------------------------------------------------- exit codes


def test_unknown_config_key_exits_2(tmp_path, capsys):
    bad = tmp_path / "bad.cfg"
    bad.write_text("nope = 1\n")
    assert run_cli("harvest", "--config", bad, "--out", tmp_path) == cli.EXIT_CONFIG_ERROR
    assert "unknown config key" in capsys.readouterr().err


def test_garbage_input_exits_3(tmp_path):
    junk = tmp_path / "junk.bin"
    junk.write_bytes(b"definitely not bits")
    assert run_cli("analyze", "--in", junk, "--out", tmp_path) == cli.EXIT_DATA_ERROR


def test_missing_input_exits_3(tmp_path):
    assert run_cli("whiten", "--in", tmp_path / "absent.rtnb",
                   "--out", tmp_path) == cli.EXIT_DATA_ERROR


def test_unsupported_format_rejected_by_parser(tmp_path):
    with pytest.raises(SystemExit) as exc:
        run_cli("harvest", "--format", "csv", "--out", tmp_path)
    assert exc.value.code == 2


def test_battery_failure_exits_1_on_constant_bits(tmp_path):
    zeros = tmp_path / "zeros.rtnb"
    bg.write_bits(bg.BitStream(np.zeros(20000, np.uint8)), zeros)
    assert run_cli("test", "--in", zeros, "--out", tmp_path) == cli.EXIT_TEST_FAILURE


def test_battery_passes_on_fair_bits(tmp_path, capsys):
    rng = np.random.default_rng(7)
    fair = tmp_path / "fair.rtnb"
    bg.write_bits(bg.BitStream((rng.random(200_000) < 0.5).astype(np.uint8)), fair)
    assert run_cli("test", "--in", fair, "--out", tmp_path) == cli.EXIT_OK
    lines = capsys.readouterr().out.strip().splitlines()
    # one verdict line per result plus the summary
    assert sum(("PASS" in l or "FAIL" in l) for l in lines) == 12
    report = json.loads((tmp_path / "test_report.json").read_text())
    assert report["all_pass"] is True
    assert len(report["results"]) == 12


# -------------------------------------------------------------- harvest


def test_harvest_artifacts_and_manifest(harvest_dir):
    names = {p.name for p in harvest_dir.iterdir()}
    assert {"decision.rtnb", "node_x.rtnt", "node_y.rtnt", "comparator_u.rtnt",
            "harvest_summary.json", "manifest.json"} <= names
    manifest = json.loads((harvest_dir / "manifest.json").read_text())
    assert manifest["command"] == "harvest"
    assert "harvest.differential" in manifest["stage_seeds"]
    for entry in manifest["artifacts"]:
        payload = (harvest_dir / entry["name"]).read_bytes()
        assert hashlib.sha256(payload).hexdigest() == entry["sha256"]
        assert len(payload) == entry["bytes"]


def test_harvest_repeat_is_byte_identical(short_cfg, harvest_dir, tmp_path):
    assert run_cli("harvest", "--config", short_cfg, "--out", tmp_path) == cli.EXIT_OK
    for name in ("decision.rtnb", "node_x.rtnt", "manifest.json"):
        assert (tmp_path / name).read_bytes() == (harvest_dir / name).read_bytes()


def test_harvest_seed_changes_bits(short_cfg, harvest_dir, tmp_path):
    assert run_cli("harvest", "--config", short_cfg, "--seed", 4,
                   "--out", tmp_path) == cli.EXIT_OK
    assert (tmp_path / "decision.rtnb").read_bytes() != \
        (harvest_dir / "decision.rtnb").read_bytes()


def test_harvest_ascii_format(short_cfg, tmp_path):
    assert run_cli("harvest", "--config", short_cfg, "--format", "ascii",
                   "--out", tmp_path) == cli.EXIT_OK
    text = (tmp_path / "decision.txt").read_text().strip()
    assert set(text) <= {"0", "1"}
    assert len(text) == json.loads(
        (tmp_path / "harvest_summary.json").read_text())["n_bits"]


def test_single_ended_harvest_has_no_y_node(tmp_path):
    cfg = tmp_path / "se.cfg"
    cfg.write_text("harvester.mode = single_ended\nrun.duration = 30.0\n")
    out = tmp_path / "out"
    assert run_cli("harvest", "--config", cfg, "--out", out) == cli.EXIT_OK
    assert not (out / "node_y.rtnt").exists()
    assert (out / "node_x.rtnt").exists()


# ------------------------------------------------------ whiten / analyze


def test_whiten_is_involution(harvest_dir, tmp_path):
    once = tmp_path / "w1"
    twice = tmp_path / "w2"
    assert run_cli("whiten", "--in", harvest_dir / "decision.rtnb", "--out", once) == 0
    assert run_cli("whiten", "--in", once / "whitened.rtnb", "--out", twice) == 0
    original = bg.read_bits(harvest_dir / "decision.rtnb")
    restored = bg.read_bits(twice / "whitened.rtnb")
    assert np.array_equal(original.bits, restored.bits)


def test_analyze_bits_report(short_cfg, harvest_dir, tmp_path):
    assert run_cli("analyze", "--config", short_cfg,
                   "--in", harvest_dir / "decision.rtnb",
                   "--out", tmp_path) == cli.EXIT_OK
    report = json.loads((tmp_path / "analyze_report.json").read_text())
    assert report["input_kind"] == "bits"
    assert 0.0 < report["ones_fraction"] < 1.0
    assert report["autocorrelation"]["max_lag"] == 100
    assert 0.0 < report["entropy"]["bits_per_bit"] <= 1.0
    assert report["entropy"]["block_size"] == 1
    assert report["markov_baseline"]["order"] == 8
    assert (tmp_path / "autocorr.csv").read_text().startswith("lag,rho,band")


def test_analyze_trace_report(harvest_dir, tmp_path):
    assert run_cli("analyze", "--in", harvest_dir / "node_x.rtnt",
                   "--out", tmp_path) == cli.EXIT_OK
    report = json.loads((tmp_path / "analyze_report.json").read_text())
    assert report["input_kind"] == "trace"
    assert (tmp_path / "psd.csv").exists()
    assert (tmp_path / "tlp.csv").exists()


def test_analyze_json_format_keeps_report_only(harvest_dir, tmp_path):
    assert run_cli("analyze", "--in", harvest_dir / "decision.rtnb",
                   "--format", "json", "--out", tmp_path) == cli.EXIT_OK
    names = {p.name for p in tmp_path.iterdir()}
    assert names == {"analyze_report.json", "manifest.json"}


# ------------------------------------------------- simulate and friends


def test_simulate_csv_and_ground_truth(tmp_path):
    cfg = tmp_path / "sim.cfg"
    cfg.write_text("run.duration = 30.0\nseed = 11\n")
    out = tmp_path / "out"
    assert run_cli("simulate", "--config", cfg, "--format", "csv",
                   "--out", out) == cli.EXIT_OK
    truth = json.loads((out / "ground_truth.json").read_text())
    assert len(truth["traps"]) == 1
    assert truth["traps"][0]["transitions"] > 0
    header = (out / "trace.csv").read_text().splitlines()[0]
    assert header == "time,current"
    assert (out / "trace.rtnt").exists()


def test_bitmap_p4_and_p1(harvest_dir, tmp_path):
    p4 = tmp_path / "img.pbm"
    assert run_cli("bitmap", "--in", harvest_dir / "decision.rtnb",
                   "--width", 16, "--height", 16, "--outfile", p4) == cli.EXIT_OK
    assert p4.read_bytes().startswith(b"P4\n16 16\n")
    p1 = tmp_path / "img_plain.pbm"
    assert run_cli("bitmap", "--in", harvest_dir / "decision.rtnb", "--width", 16,
                   "--height", 16, "--plain", "--outfile", p1) == cli.EXIT_OK
    assert p1.read_text().startswith("P1\n16 16\n")


def test_attack_baseline_report(harvest_dir, tmp_path):
    assert run_cli("attack-baseline", "--in", harvest_dir / "decision.rtnb",
                   "--order", 4, "--out", tmp_path) == cli.EXIT_OK
    report = json.loads((tmp_path / "attack_baseline.json").read_text())
    assert report["order"] == 4
    assert 0.0 <= report["accuracy"] <= 1.0
    lo, hi = report["interval"]
    assert lo <= report["accuracy"] <= hi


# ------------------------------------------------------- output routing


def test_env_var_fallback_for_out(tmp_path, monkeypatch):
    monkeypatch.setenv(cli.OUT_ENV_VAR, str(tmp_path / "envout"))
    zeros = tmp_path / "z.rtnb"
    bg.write_bits(bg.BitStream(np.zeros(512, np.uint8)), zeros)
    run_cli("bitmap", "--in", zeros, "--width", 8, "--height", 8)
    assert (tmp_path / "envout" / "bitmap.pbm").exists()


def test_cli_out_beats_config_out(tmp_path, monkeypatch):
    monkeypatch.setenv(cli.OUT_ENV_VAR, str(tmp_path / "envout"))
    cfg = tmp_path / "c.cfg"
    cfg.write_text(f"run.duration = 30.0\nout = {tmp_path / 'cfgout'}\n")
    explicit = tmp_path / "explicit"
    assert run_cli("harvest", "--config", cfg, "--out", explicit) == cli.EXIT_OK
    assert (explicit / "decision.rtnb").exists()
    assert not (tmp_path / "cfgout").exists()
    assert run_cli("harvest", "--config", cfg) == cli.EXIT_OK
    assert (tmp_path / "cfgout" / "decision.rtnb").exists()
    assert not (tmp_path / "envout").exists()


# ----------------------------------------------------------------- repro


def test_repro_rejects_unknown_target(tmp_path):
    with pytest.raises(ConfigError, match="unknown repro target"):
        cli.run_repro("fig99", tmp_path)


def test_repro_fig4_summary_and_manifest(tmp_path):
    summary = cli.run_repro("fig4", tmp_path, seed=3)
    assert summary["hh_dominant"] is True
    assert set(summary["corner_counts"]) == {"HH", "HL", "LH", "LL"}
    out = tmp_path / "fig4"
    manifest = json.loads((out / "manifest.json").read_text())
    assert {e["name"] for e in manifest["artifacts"]} == \
        {"trace.csv", "tlp.csv", "summary.json"}


def test_repro_fig5a_stream_ordering(tmp_path):
    # reduced length; the frozen full-length figures live in the acceptance suite
    summary = cli.repro_fig5a(tmp_path, cf.DEFAULT_MASTER_SEED, n_bits=2**13)
    s = summary["streams"]
    assert summary["ordering_ok"]
    assert s["single_ended"]["max_abs_rho"] > s["differential_raw"]["max_abs_rho"]
    assert s["differential_raw"]["max_abs_rho"] > \
        s["differential_whitened"]["max_abs_rho"]
    for name in ("single_ended", "differential_raw", "differential_whitened"):
        assert (tmp_path / f"autocorr_{name}.csv").exists()


def test_repro_determinism_across_runs(tmp_path):
    cli.run_repro("fig3d", tmp_path / "a", seed=5)
    cli.run_repro("fig3d", tmp_path / "b", seed=5)
    a = (tmp_path / "a" / "fig3d" / "manifest.json").read_bytes()
    b = (tmp_path / "b" / "fig3d" / "manifest.json").read_bytes()
    assert a == b


@pytest.mark.skipif(shutil.which("rtnlab") is None,
                    reason="console script not installed")
def test_console_entry_point(tmp_path):
    cfg = tmp_path / "c.cfg"
    cfg.write_text("run.duration = 30.0\n")
    proc = subprocess.run(["rtnlab", "harvest", "--config", str(cfg),
                           "--out", str(tmp_path / "o")],
                          capture_output=True, text=True)
    assert proc.returncode == 0
    assert (tmp_path / "o" / "decision.rtnb").exists()
