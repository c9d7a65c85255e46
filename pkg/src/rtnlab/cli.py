"""Command-line front end.

Orchestrates simulate -> harvest -> whiten -> analyze -> test pipelines
from flat config files, plus canned reproduction runs for the headline
figures. Every command writes its artifacts together with a manifest
(stage seeds, config echo, SHA-256 of each file) and is byte-for-byte
deterministic under a fixed master seed.

Exit codes: 0 ok, 1 statistical-test failure, 2 configuration error,
3 data/format error.
"""

import argparse
import hashlib
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import analysis as an
from . import bitgen as bg
from . import config as cf
from . import harvester as hv
from . import rtn_core as rc
from . import stat_tests as stt
from .errors import AnalysisError, ConfigError, DataFormatError, RtnLabError

EXIT_OK = 0
EXIT_TEST_FAILURE = 1
EXIT_CONFIG_ERROR = 2
EXIT_DATA_ERROR = 3

OUT_ENV_VAR = "RTNLAB_OUT"


# ------------------------------------------------------------- plumbing


def _resolve_out(arg_out, cfg_out=None):
    """--out beats config's `out` beats $RTNLAB_OUT beats ./rtnlab-out."""
    root = arg_out or cfg_out or os.environ.get(OUT_ENV_VAR) or "rtnlab-out"
    path = Path(root)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _sha256(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _write_json(path, payload):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _write_manifest(out_dir, command, parameters, stage_seeds, artifact_names):
    entries = []
    for name in sorted(artifact_names):
        p = out_dir / name
        entries.append({"name": name, "sha256": _sha256(p), "bytes": p.stat().st_size})
    manifest = {
        "command": command,
        "parameters": parameters,
        "stage_seeds": stage_seeds,
        "artifacts": entries,
    }
    _write_json(out_dir / "manifest.json", manifest)
    return manifest


def _jsonable(mapping):
    out = {}
    for k, v in mapping.items():
        out[k] = list(v) if isinstance(v, tuple) else v
    return out


def _load_config(args):
    cfg = cf.load_config(args.config) if args.config else cf.default_config()
    if getattr(args, "seed", None) is not None:
        cfg.seed = args.seed
    return cfg


def _read_bits_file(path):
    try:
        return bg.read_bits(path)
    except OSError as exc:
        raise DataFormatError(f"cannot read {path}: {exc}") from exc


def _sniff_is_trace(path):
    try:
        with open(path, "rb") as fh:
            return fh.read(4) == b"RTNT"
    except OSError as exc:
        raise DataFormatError(f"cannot read {path}: {exc}") from exc


def _check_format(value, allowed, command):
    if value not in allowed:
        raise ConfigError(
            f"{command} supports --format {{{','.join(allowed)}}}, got {value!r}"
        )


# ------------------------------------------------------------- commands


def cmd_simulate(args):
    cfg = _load_config(args)
    _check_format(args.format, ("binary", "csv"), "simulate")
    out = _resolve_out(args.out, cfg.out_dir)
    dev = cfg.device()
    sim_seed = cfg.stage_seed("simulate")
    rng = np.random.default_rng(sim_seed)
    trajectories = [
        rc.simulate_trap(trap, cfg.op, cfg.duration, rng) for trap in dev.traps
    ]
    noise = (cfg.harvester.current_noise_sigma
             if cfg.harvester.current_noise_sigma is not None
             else (np.mean([t.delta_i for t in dev.traps]) / 20.0 if dev.traps else 0.0))
    trace = rc.render_trace(dev, trajectories, cfg.op, dt=cfg.dt,
                            duration=cfg.duration, noise_sigma=float(noise),
                            seed=cfg.stage_seed("simulate.noise"))
    artifacts = ["trace.rtnt"]
    rc.write_trace(trace, out / "trace.rtnt")
    if args.format == "csv":
        rc.trace_to_csv(trace, out / "trace.csv")
        artifacts.append("trace.csv")
    truth = []
    for trap, traj in zip(dev.traps, trajectories):
        th, tl = rc.effective_dwell_times(trap, cfg.op)
        truth.append({
            "tau_high_s": th,
            "tau_low_s": tl,
            "delta_i_a": trap.delta_i,
            "transitions": int(traj.transition_times.size),
        })
    _write_json(out / "ground_truth.json", {"traps": truth, "dt": cfg.dt,
                                            "duration": cfg.duration})
    artifacts.append("ground_truth.json")
    _write_manifest(out, "simulate", _jsonable(cf.config_to_mapping(cfg)),
                    {"simulate": sim_seed, "simulate.noise": cfg.stage_seed("simulate.noise")},
                    artifacts)
    print(f"simulate: {len(dev.traps)} trap(s), {trace.samples.size} samples -> {out}")
    return EXIT_OK


def _run_harvester(cfg):
    label = f"harvest.{cfg.harvester.mode}"
    seed = cfg.stage_seed(label)
    if cfg.harvester.mode == hv.DIFFERENTIAL:
        record = hv.run_differential(cfg.device(), cfg.device(), cfg.harvester,
                                     cfg.disturbance, cfg.op, cfg.duration,
                                     cfg.dt, seed)
    else:
        record = hv.run_single_ended(cfg.device(), cfg.harvester, cfg.disturbance,
                                     cfg.op, cfg.duration, cfg.dt, seed)
    return record, {label: seed}


def cmd_harvest(args):
    cfg = _load_config(args)
    _check_format(args.format, ("binary", "ascii"), "harvest")
    out = _resolve_out(args.out, cfg.out_dir)
    record, seeds = _run_harvester(cfg)
    bits = bg.sample_bits(record, cfg.sampler)

    artifacts = []
    for channel, name in (("x", "node_x.rtnt"), ("y", "node_y.rtnt"),
                          ("u", "comparator_u.rtnt")):
        if channel == "y" and record.v_y is None:
            continue
        rc.write_trace(record.to_trace(channel), out / name)
        artifacts.append(name)
    bits_name = "decision.rtnb" if args.format == "binary" else "decision.txt"
    bg.write_bits(bits, out / bits_name, fmt=args.format)
    artifacts.append(bits_name)
    summary = {
        "mode": cfg.harvester.mode,
        "n_samples": int(record.decision.size),
        "n_bits": bits.length,
        "ones_fraction": float(bits.bits.mean()) if bits.length else None,
    }
    _write_json(out / "harvest_summary.json", summary)
    artifacts.append("harvest_summary.json")
    _write_manifest(out, "harvest", _jsonable(cf.config_to_mapping(cfg)), seeds, artifacts)
    print(f"harvest[{cfg.harvester.mode}]: {bits.length} bits, "
          f"P1={summary['ones_fraction']:.4f} -> {out}")
    return EXIT_OK


def cmd_whiten(args):
    cfg = _load_config(args)
    _check_format(args.format, ("binary", "ascii"), "whiten")
    out = _resolve_out(args.out, cfg.out_dir)
    stream = _read_bits_file(args.infile)
    white = bg.lfsr_whiten(stream, cfg.lfsr)
    name = "whitened.rtnb" if args.format == "binary" else "whitened.txt"
    bg.write_bits(white, out / name, fmt=args.format)
    _write_manifest(out, "whiten",
                    {"input": os.path.basename(args.infile),
                     "lfsr.width": cfg.lfsr.width,
                     "lfsr.taps": list(cfg.lfsr.taps),
                     "lfsr.seed_state": cfg.lfsr.seed_state},
                    {}, [name])
    print(f"whiten: {white.length} bits -> {out / name}")
    return EXIT_OK


def _analyze_trace(trace, params, out):
    artifacts, report = [], {"input_kind": "trace", "n_samples": int(trace.samples.size),
                             "dt": trace.dt}
    # halve the Welch segment until it fits short traces (>= 2 segments)
    seg = params.segment_length
    while seg > 64 and trace.samples.size < 2 * seg:
        seg //= 2
    spec = an.estimate_psd(trace, segment_length=seg)
    an.spectrum_to_csv(spec, out / "psd.csv")
    artifacts.append("psd.csv")
    try:
        fitted = an.characterize_spectrum(spec)
        report["lorentzian"] = {"corner_hz": fitted.fitted_corner,
                                "plateau": fitted.fitted_plateau,
                                "alpha": fitted.fitted_alpha}
    except AnalysisError as exc:
        report["lorentzian"] = None
        report["lorentzian_note"] = str(exc)
    tl = an.tlp(trace.samples)
    np.savetxt(out / "tlp.csv", tl.counts, fmt="%d", delimiter=",")
    artifacts.append("tlp.csv")
    report["tlp"] = {"lag": tl.lag, "corner_counts": tl.corner_counts}
    try:
        ext = an.extract_levels(trace)
        report["levels"] = {"delta_i_a": ext.delta_i, "threshold_a": ext.threshold,
                            "noise_sigma_a": ext.noise_sigma}
        dw = an.dwell_times(ext.levels, trace.dt)
        report["dwells"] = {"tau_high_s": dw.mean_tau_h, "tau_low_s": dw.mean_tau_l,
                            "n_high": dw.n_high, "n_low": dw.n_low}
    except AnalysisError as exc:
        report["levels"] = None
        report["levels_note"] = str(exc)
    return report, artifacts


def _analyze_bits(stream, params, out):
    artifacts = []
    report = {"input_kind": "bits", "n_bits": stream.length,
              "ones_fraction": float(stream.bits.mean()) if stream.length else None}
    ac = an.autocorrelation(stream, max_lag=params.max_lag)
    with open(out / "autocorr.csv", "w") as fh:
        fh.write("lag,rho,band\n")
        for lag, rho in zip(ac.lags.tolist(), ac.rho.tolist()):
            fh.write(f"{lag},{rho!r},{ac.confidence_band!r}\n")
    artifacts.append("autocorr.csv")
    viol = int(np.count_nonzero(np.abs(ac.rho) > ac.confidence_band))
    report["autocorrelation"] = {"max_abs_rho": float(np.max(np.abs(ac.rho))),
                                 "band": ac.confidence_band,
                                 "violations": viol, "max_lag": params.max_lag}
    try:
        ent = an.shannon_entropy(stream, block_size=params.entropy_block)
        report["entropy"] = {"bits_per_bit": ent.shannon_bits_per_bit,
                             "block_size": ent.block_size}
    except AnalysisError as exc:
        report["entropy"] = None
        report["entropy_note"] = str(exc)
    w, h = params.bitmap_width, params.bitmap_height
    if stream.length >= w * h:
        an.bitmap_emit(stream, w, h, out / "bitmap.pbm")
        artifacts.append("bitmap.pbm")
    mk = an.markov_predict(stream, order=8)
    report["markov_baseline"] = {"order": mk.order, "accuracy": mk.accuracy,
                                 "interval": list(mk.interval), "n_test": mk.n_test}
    return report, artifacts


def cmd_analyze(args):
    cfg = _load_config(args)
    _check_format(args.format, ("csv", "json"), "analyze")
    out = _resolve_out(args.out, cfg.out_dir)
    params = cfg.analysis
    if _sniff_is_trace(args.infile):
        report, artifacts = _analyze_trace(rc.read_trace(args.infile), params, out)
    else:
        report, artifacts = _analyze_bits(_read_bits_file(args.infile), params, out)
    if args.format == "json":
        for name in artifacts:  # keep only the JSON report
            (out / name).unlink()
        artifacts = []
    _write_json(out / "analyze_report.json", report)
    artifacts.append("analyze_report.json")
    _write_manifest(out, "analyze",
                    {"input": os.path.basename(args.infile),
                     "analysis.segment_length": params.segment_length,
                     "analysis.entropy_block": params.entropy_block,
                     "analysis.max_lag": params.max_lag},
                    {}, artifacts)
    print(f"analyze[{report['input_kind']}]: report -> {out / 'analyze_report.json'}")
    return EXIT_OK


def cmd_test(args):
    _check_format(args.format, ("json",), "test")
    out = _resolve_out(args.out, None)
    stream = _read_bits_file(args.infile)
    report = stt.run_battery(stream, alpha=args.alpha)
    payload = report.to_json()
    _write_json(out / "test_report.json", payload)
    _write_manifest(out, "test",
                    {"input": os.path.basename(args.infile), "alpha": args.alpha},
                    {}, ["test_report.json"])
    for result in report.results:
        print(f"{result.name:30s} p={result.p_value:.6f} "
              f"{'PASS' if result.passed else 'FAIL'}")
    print(f"battery: {'all passed' if report.all_passed else 'FAILURES present'} "
          f"(n={report.input_length}, alpha={args.alpha})")
    return EXIT_OK if report.all_passed else EXIT_TEST_FAILURE


def cmd_bitmap(args):
    out_file = Path(args.outfile) if args.outfile else None
    stream = _read_bits_file(args.infile)
    if out_file is None:
        out_file = _resolve_out(args.out, None) / "bitmap.pbm"
    out_file.parent.mkdir(parents=True, exist_ok=True)
    an.bitmap_emit(stream, args.width, args.height, out_file,
                   fmt="P1" if args.plain else "P4")
    print(f"bitmap: {args.width}x{args.height} -> {out_file}")
    return EXIT_OK


def cmd_attack_baseline(args):
    out = _resolve_out(args.out, None)
    stream = _read_bits_file(args.infile)
    mk = an.markov_predict(stream, order=args.order,
                           train_fraction=args.train_fraction)
    payload = {"order": mk.order, "accuracy": mk.accuracy,
               "interval": list(mk.interval), "n_test": mk.n_test,
               "train_fraction": args.train_fraction}
    _write_json(out / "attack_baseline.json", payload)
    _write_manifest(out, "attack-baseline",
                    {"input": os.path.basename(args.infile), "order": args.order,
                     "train_fraction": args.train_fraction},
                    {}, ["attack_baseline.json"])
    print(f"attack-baseline: order={mk.order} accuracy={mk.accuracy:.4f} "
          f"CI=[{mk.interval[0]:.4f}, {mk.interval[1]:.4f}] n={mk.n_test}")
    return EXIT_OK


# ---------------------------------------------------------- repro runs


def _calibration_bits(mode, n_bits, seed):
    cfg = cf.calibration_config(mode=mode, n_bits=n_bits, seed=seed)
    record, seeds = _run_harvester(cfg)
    bits = bg.BitStream(bg.sample_bits(record, cfg.sampler).bits[:n_bits])
    return cfg, bits, seeds


def _autocorr_csv(stream, max_lag, path):
    ac = an.autocorrelation(stream, max_lag=max_lag)
    with open(path, "w") as fh:
        fh.write("lag,rho,band\n")
        for lag, rho in zip(ac.lags.tolist(), ac.rho.tolist()):
            fh.write(f"{lag},{rho!r},{ac.confidence_band!r}\n")
    return ac


def repro_fig1a(out, seed):
    """Spectra for dwell-time pairs spanning two decades, with fits."""
    fits, artifacts, seeds = [], [], {}
    for i, (tau_h, tau_l) in enumerate(cf.SPECTRAL_PAIRS):
        trap = rc.TrapParams(tau_capture_ref=tau_h, tau_emission_ref=tau_l,
                             delta_i=200e-12, v_sensitivity=50e-3,
                             activation_energy=0.3,
                             ref_point=rc.OperatingPoint(25e-3, 300.0))
        op = trap.ref_point
        f_rts = rc.corner_frequency(tau_h, tau_l)
        fs = 256.0 * f_rts
        n = 2**21
        label = f"fig1a.pair{i}"
        seeds[label] = cf.derive_seed(seed, label)
        traj = rc.simulate_trap(trap, op, n / fs, seeds[label])
        trace = rc.render_trace(rc.DeviceParams(traps=(trap,)), [traj], op,
                                dt=1.0 / fs, duration=n / fs, noise_sigma=0.0,
                                seed=0)
        spec = an.characterize_spectrum(
            an.estimate_psd(trace, segment_length=8192))
        name = f"psd_pair{i}.csv"
        an.spectrum_to_csv(spec, out / name)
        artifacts.append(name)
        fits.append({
            "tau_high_s": tau_h, "tau_low_s": tau_l,
            "corner_expected_hz": f_rts,
            "corner_fitted_hz": spec.fitted_corner,
            "corner_rel_err": abs(spec.fitted_corner - f_rts) / f_rts,
            "alpha": spec.fitted_alpha,
        })
    summary = {
        "pairs": fits,
        "worst_corner_rel_err": max(f["corner_rel_err"] for f in fits),
        "alpha_range": [min(f["alpha"] for f in fits),
                        max(f["alpha"] for f in fits)],
    }
    _write_json(out / "fits.json", summary)
    artifacts.append("fits.json")
    params = {"pairs": [list(p) for p in cf.SPECTRAL_PAIRS],
              "samples_per_pair": 2**21, "fs_over_corner": 256}
    _write_manifest(out, "repro fig1a", params, seeds, artifacts)
    return summary


def repro_fig3b(out, seed):
    """Normalized spectra across the read-voltage sweep."""
    trap = rc.default_trap()
    rows, artifacts, seeds = [], [], {}
    for i, v in enumerate((25e-3, 75e-3, 125e-3)):
        op = rc.OperatingPoint(v_read=v, temperature=300.0)
        tau_h, tau_l = rc.effective_dwell_times(trap, op)
        f_rts = rc.corner_frequency(tau_h, tau_l)
        fs, n = 256.0 * f_rts, 2**20
        label = f"fig3b.v{i}"
        seeds[label] = cf.derive_seed(seed, label)
        traj = rc.simulate_trap(trap, op, n / fs, seeds[label])
        trace = rc.render_trace(rc.DeviceParams(traps=(trap,)), [traj], op,
                                dt=1.0 / fs, duration=n / fs, noise_sigma=0.0,
                                seed=0)
        spec = an.estimate_psd(trace, segment_length=8192, normalized=True)
        name = f"norm_psd_{int(round(v * 1e3))}mV.csv"
        an.spectrum_to_csv(spec, out / name)
        artifacts.append(name)
        rows.append({"v_read_v": v, "corner_hz": f_rts,
                     "plateau_normalized": float(np.median(spec.psd[1:8]))})
    summary = {"sweep": rows}
    _write_json(out / "summary.json", summary)
    artifacts.append("summary.json")
    _write_manifest(out, "repro fig3b", {"voltages_v": [r["v_read_v"] for r in rows]},
                    seeds, artifacts)
    return summary


def _estimated_dwells_and_amplitude(trap, op, sim_seed, noise_seed,
                                    transitions=4000):
    """Ground truth vs estimates recovered from a rendered noisy trace."""
    tau_h, tau_l = rc.effective_dwell_times(trap, op)
    dt = min(tau_h, tau_l) / 50.0
    duration = transitions * (tau_h + tau_l) / 2.0
    traj = rc.simulate_trap(trap, op, duration, sim_seed)
    trace = rc.render_trace(rc.DeviceParams(traps=(trap,)), [traj], op, dt=dt,
                            duration=duration, noise_sigma=trap.delta_i / 20.0,
                            seed=noise_seed)
    ext = an.extract_levels(trace)
    dw = an.dwell_times(ext.levels, dt)
    return {"tau_high_true_s": tau_h, "tau_low_true_s": tau_l,
            "tau_high_est_s": dw.mean_tau_h, "tau_low_est_s": dw.mean_tau_l,
            "delta_i_true_a": trap.delta_i, "delta_i_est_a": ext.delta_i,
            "n_transitions": dw.n_high + dw.n_low}


def _sweep_rows(trap, points, make_op, seed, prefix):
    rows, seeds = [], {}
    for i, value in enumerate(points):
        s_sim = cf.derive_seed(seed, f"{prefix}.{i}.trap")
        s_noise = cf.derive_seed(seed, f"{prefix}.{i}.noise")
        seeds[f"{prefix}.{i}.trap"] = s_sim
        seeds[f"{prefix}.{i}.noise"] = s_noise
        row = _estimated_dwells_and_amplitude(trap, make_op(value), s_sim, s_noise)
        row["sweep_value"] = value
        rows.append(row)
    return rows, seeds


def _rows_to_csv(rows, path, value_key):
    keys = [value_key, "tau_high_true_s", "tau_high_est_s", "tau_low_true_s",
            "tau_low_est_s", "delta_i_true_a", "delta_i_est_a", "n_transitions"]
    with open(path, "w") as fh:
        fh.write(",".join(keys) + "\n")
        for row in rows:
            values = [row["sweep_value"] if k == value_key else row[k] for k in keys]
            fh.write(",".join(repr(v) for v in values) + "\n")


def repro_fig3c(out, seed):
    """Dwell times across the read-voltage sweep (capture accelerates)."""
    trap = rc.default_trap()
    rows, seeds = _sweep_rows(trap, cf.VOLTAGE_SWEEP,
                              lambda v: rc.OperatingPoint(v, 300.0), seed, "fig3c")
    _rows_to_csv(rows, out / "dwell_vs_voltage.csv", "v_read_v")
    est = [r["tau_high_est_s"] for r in rows]
    low = [r["tau_low_est_s"] for r in rows]
    summary = {
        "sweep": rows,
        "tau_high_strictly_decreasing": all(b < a for a, b in zip(est, est[1:])),
        "tau_low_spread": max(low) / min(low) - 1.0,
    }
    _write_json(out / "summary.json", summary)
    _write_manifest(out, "repro fig3c", {"voltages_v": list(cf.VOLTAGE_SWEEP)},
                    seeds, ["dwell_vs_voltage.csv", "summary.json"])
    return summary


def repro_fig3d(out, seed):
    """Amplitude stays put across temperature while dwells accelerate."""
    trap = rc.default_trap()
    rows, seeds = _sweep_rows(trap, cf.TEMPERATURE_SWEEP,
                              lambda t: rc.OperatingPoint(25e-3, t), seed, "fig3d")
    _rows_to_csv(rows, out / "amplitude_vs_temperature.csv", "temperature_k")
    amps = [r["delta_i_est_a"] for r in rows]
    summary = {
        "sweep": rows,
        "delta_i_rel_spread": max(amps) / min(amps) - 1.0,
    }
    _write_json(out / "summary.json", summary)
    _write_manifest(out, "repro fig3d",
                    {"temperatures_k": list(cf.TEMPERATURE_SWEEP)}, seeds,
                    ["amplitude_vs_temperature.csv", "summary.json"])
    return summary


def repro_fig3e(out, seed):
    """Both dwell times shorten as temperature rises."""
    trap = rc.default_trap()
    rows, seeds = _sweep_rows(trap, cf.TEMPERATURE_SWEEP,
                              lambda t: rc.OperatingPoint(25e-3, t), seed, "fig3e")
    _rows_to_csv(rows, out / "dwell_vs_temperature.csv", "temperature_k")
    high = [r["tau_high_est_s"] for r in rows]
    low = [r["tau_low_est_s"] for r in rows]
    summary = {
        "sweep": rows,
        "tau_high_decreasing": all(b < a for a, b in zip(high, high[1:])),
        "tau_low_decreasing": all(b < a for a, b in zip(low, low[1:])),
    }
    _write_json(out / "summary.json", summary)
    _write_manifest(out, "repro fig3e",
                    {"temperatures_k": list(cf.TEMPERATURE_SWEEP)}, seeds,
                    ["dwell_vs_temperature.csv", "summary.json"])
    return summary


def repro_fig4(out, seed):
    """A telegraph trace and its time-lag plot (HH-dominant)."""
    trap = rc.default_trap()
    op = trap.ref_point
    dt, duration = 2e-3, 120.0
    s_sim = cf.derive_seed(seed, "fig4.trap")
    s_noise = cf.derive_seed(seed, "fig4.noise")
    traj = rc.simulate_trap(trap, op, duration, s_sim)
    trace = rc.render_trace(rc.DeviceParams(traps=(trap,)), [traj], op, dt=dt,
                            duration=duration, noise_sigma=trap.delta_i / 20.0,
                            seed=s_noise)
    rc.trace_to_csv(trace, out / "trace.csv")
    ext = an.extract_levels(trace)
    tl = an.tlp(trace.samples)
    np.savetxt(out / "tlp.csv", tl.counts, fmt="%d", delimiter=",")
    corner = an.tlp(ext.levels).corner_counts
    summary = {
        "corner_counts": corner,
        "hh_dominant": corner["HH"] == max(corner.values()),
        "delta_i_est_a": ext.delta_i,
    }
    _write_json(out / "summary.json", summary)
    _write_manifest(out, "repro fig4", {"dt": dt, "duration": duration},
                    {"fig4.trap": s_sim, "fig4.noise": s_noise},
                    ["trace.csv", "tlp.csv", "summary.json"])
    return summary


def repro_fig5a(out, seed, n_bits=2**17):
    """Autocorrelation: single-ended vs differential raw vs whitened."""
    _, se_bits, se_seeds = _calibration_bits(hv.SINGLE_ENDED, n_bits, seed)
    cfg, raw_bits, df_seeds = _calibration_bits(hv.DIFFERENTIAL, n_bits, seed)
    white = bg.lfsr_whiten(raw_bits, cfg.lfsr)
    streams = {"single_ended": se_bits, "differential_raw": raw_bits,
               "differential_whitened": white}
    artifacts, stats = [], {}
    for name, stream in streams.items():
        ac = _autocorr_csv(stream, cfg.analysis.max_lag, out / f"autocorr_{name}.csv")
        artifacts.append(f"autocorr_{name}.csv")
        stats[name] = {
            "max_abs_rho": float(np.max(np.abs(ac.rho))),
            "violations": int(np.count_nonzero(np.abs(ac.rho) > ac.confidence_band)),
            "in_band": int(np.count_nonzero(np.abs(ac.rho) <= ac.confidence_band)),
            "band": ac.confidence_band,
        }
    summary = {
        "n_bits": n_bits,
        "streams": stats,
        "ordering_ok": (stats["single_ended"]["max_abs_rho"]
                        > stats["differential_raw"]["max_abs_rho"]
                        > stats["differential_whitened"]["max_abs_rho"]),
    }
    _write_json(out / "summary.json", summary)
    artifacts.append("summary.json")
    _write_manifest(out, "repro fig5a", _jsonable(cf.config_to_mapping(cfg)),
                    {**se_seeds, **df_seeds}, artifacts)
    return summary


def _repro_bitmap(out, seed, whitened):
    side = 256
    cfg, raw, seeds = _calibration_bits(hv.DIFFERENTIAL, side * side, seed)
    stream = bg.lfsr_whiten(raw, cfg.lfsr) if whitened else raw
    an.bitmap_emit(stream, side, side, out / "bitmap.pbm")
    summary = {"width": side, "height": side, "whitened": whitened,
               "ones_fraction": float(stream.bits.mean())}
    _write_json(out / "summary.json", summary)
    _write_manifest(out, f"repro fig5{'c' if whitened else 'b'}",
                    _jsonable(cf.config_to_mapping(cfg)), seeds,
                    ["bitmap.pbm", "summary.json"])
    return summary


def repro_fig5b(out, seed):
    """Bitmap of the raw differential stream."""
    return _repro_bitmap(out, seed, whitened=False)


def repro_fig5c(out, seed):
    """Bitmap of the whitened differential stream."""
    return _repro_bitmap(out, seed, whitened=True)


def repro_table1(out, seed):
    """Statistical battery on a 10^6-bit whitened differential stream."""
    cfg, raw, seeds = _calibration_bits(hv.DIFFERENTIAL, cf.CAL_BITS, seed)
    white = bg.lfsr_whiten(raw, cfg.lfsr)
    report = stt.run_battery(white.bits[:1_000_000])
    payload = report.to_json()
    _write_json(out / "table1.json", payload)
    with open(out / "table1.csv", "w") as fh:
        fh.write("test,p_value,pass\n")
        for r in report.results:
            fh.write(f"{r.name},{r.p_value!r},{str(r.passed).lower()}\n")
    _write_manifest(out, "repro table1", _jsonable(cf.config_to_mapping(cfg)),
                    seeds, ["table1.json", "table1.csv"])
    return payload


def repro_entropy(out, seed):
    """The block-8 entropy triple plus the exported bitstreams."""
    _, se_bits, se_seeds = _calibration_bits(hv.SINGLE_ENDED, cf.CAL_BITS, seed)
    cfg, raw_bits, df_seeds = _calibration_bits(hv.DIFFERENTIAL, cf.CAL_BITS, seed)
    white = bg.lfsr_whiten(raw_bits, cfg.lfsr)
    block = cfg.analysis.entropy_block

    def h(stream):
        return an.shannon_entropy(stream, block_size=block).shannon_bits_per_bit

    triple = {"single_ended": h(se_bits), "differential_raw": h(raw_bits),
              "whitened": h(white)}
    artifacts = []
    for name, stream in (("single_ended", se_bits), ("differential_raw", raw_bits),
                         ("whitened", white)):
        fname = f"bits_{name}.rtnb"
        bg.write_bits(stream, out / fname)
        artifacts.append(fname)
    summary = {
        "block_size": block,
        "n_bits": cf.CAL_BITS,
        "entropy": triple,
        "ordering_ok": (triple["single_ended"] < triple["differential_raw"]
                        < triple["whitened"]),
    }
    _write_json(out / "entropy.json", summary)
    artifacts.append("entropy.json")
    _write_manifest(out, "repro entropy", _jsonable(cf.config_to_mapping(cfg)),
                    {**se_seeds, **df_seeds}, artifacts)
    return summary


REPRO_TARGETS = {
    "fig1a": repro_fig1a,
    "fig3b": repro_fig3b,
    "fig3c": repro_fig3c,
    "fig3d": repro_fig3d,
    "fig3e": repro_fig3e,
    "fig4": repro_fig4,
    "fig5a": repro_fig5a,
    "fig5b": repro_fig5b,
    "fig5c": repro_fig5c,
    "table1": repro_table1,
    "entropy": repro_entropy,
}


def run_repro(target, out_root, seed=None):
    if target not in REPRO_TARGETS:
        raise ConfigError(f"unknown repro target {target!r}; "
                          f"choose from {', '.join(sorted(REPRO_TARGETS))}")
    seed = cf.DEFAULT_MASTER_SEED if seed is None else seed
    out = Path(out_root) / target
    out.mkdir(parents=True, exist_ok=True)
    return REPRO_TARGETS[target](out, seed)


def cmd_repro(args):
    out_root = _resolve_out(args.out, None)
    summary = run_repro(args.target, out_root, args.seed)
    print(json.dumps(summary, indent=2, sort_keys=True, default=str))
    return EXIT_OK


# --------------------------------------------------------------- parser


def build_parser():
    parser = argparse.ArgumentParser(
        prog="rtnlab",
        description="Telegraph-noise entropy source: simulation, harvesting,"
                    " whitening, analysis, and statistical testing.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, func, **kw):
        p = sub.add_parser(name, **kw)
        p.set_defaults(func=func)
        p.add_argument("--out", help=f"output directory (default ${OUT_ENV_VAR} or ./rtnlab-out)")
        return p

    def add_config(p, with_seed=True):
        p.add_argument("--config", help="flat dotted-key config file")
        if with_seed:
            p.add_argument("--seed", type=int, help="master seed override")

    p = add("simulate", cmd_simulate, help="device current traces to Trace files")
    add_config(p)
    p.add_argument("--format", default="binary", choices=["binary", "csv"])

    p = add("harvest", cmd_harvest, help="run a readout circuit to traces + bits")
    add_config(p)
    p.add_argument("--format", default="binary", choices=["binary", "ascii"])

    p = add("whiten", cmd_whiten, help="XOR a bitstream with the LFSR keystream")
    add_config(p, with_seed=False)
    p.add_argument("--in", dest="infile", required=True, help="input bitstream file")
    p.add_argument("--format", default="binary", choices=["binary", "ascii"])

    p = add("analyze", cmd_analyze, help="spectra/levels/TLP or entropy/autocorrelation report")
    add_config(p, with_seed=False)
    p.add_argument("--in", dest="infile", required=True, help="trace or bitstream file")
    p.add_argument("--format", default="csv", choices=["csv", "json"])

    p = add("test", cmd_test, help="statistical test battery (exit 1 on failure)")
    p.add_argument("--in", dest="infile", required=True, help="input bitstream file")
    p.add_argument("--alpha", type=float, default=0.01)
    p.add_argument("--format", default="json", choices=["json"])

    p = add("bitmap", cmd_bitmap, help="render a bitstream as a PBM image")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--width", type=int, default=256)
    p.add_argument("--height", type=int, default=256)
    p.add_argument("--outfile", help="output image path (overrides --out)")
    p.add_argument("--plain", action="store_true", help="ASCII P1 instead of binary P4")

    p = add("attack-baseline", cmd_attack_baseline,
            help="sliding-window Markov next-bit predictor")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--order", type=int, default=8)
    p.add_argument("--train-fraction", type=float, default=0.8)

    p = add("repro", cmd_repro, help="canned reproduction runs")
    p.add_argument("target", choices=sorted(REPRO_TARGETS))
    p.add_argument("--seed", type=int, help="master seed override")

    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG_ERROR
    except DataFormatError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA_ERROR
    except (AnalysisError, RtnLabError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA_ERROR


if __name__ == "__main__":
    sys.exit(main())
