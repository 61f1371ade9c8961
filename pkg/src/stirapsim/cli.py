"""Command-line entry point: one subcommand per experiment, CSV always, figures on request."""

from __future__ import annotations

import argparse
import math
import os
import sys
import tempfile
from dataclasses import replace
from importlib import metadata
from pathlib import Path

import numpy as np

from . import detection as det
from .analysis import adiabaticity_trace
from .atom import N_LEVELS, Level, pure_state
from .config import ConfigError, PRESETS, RunConfig, parse_config, resolve
from .dynamics import evolve
from .optimize import optimize_pulses
from .pulses import envelope_trace
from .scan import UNITS, EfficiencyCurve, ScanSpec, scan, string_scan

TWO_PI = 2.0 * math.pi
MHZ = TWO_PI * 1e6

# grids (lab units) used when the config's [scan] block is for another parameter
DEFAULT_GRIDS = {
    "delay": np.linspace(-6, 8.5, 30),
    "two_photon_detuning": np.linspace(-3, 3, 25),
    "width": np.array([0.5, 1, 1.5, 2, 3, 4, 6, 8, 10]),
}


def version() -> str:
    try:
        return metadata.version("artifact")
    except metadata.PackageNotFoundError:
        return "0+unknown"


def atomic_write(path: Path, text: str):
    """Write via a temporary file in the same directory, so no partial file is ever visible."""
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def config_header(cfg: RunConfig, command: str) -> list[str]:
    return [f"# stirapsim {version()} {command}"] + [f"# {ln}" for ln in cfg.header_lines()]


def table_csv(header: list[str], columns: list[str], rows, fmt: str = ".12g") -> str:
    lines = list(header) + [",".join(columns)]
    for r in rows:
        lines.append(",".join(v if isinstance(v, str) else f"{v:{fmt}}" for v in r))
    return "\n".join(lines) + "\n"


def _grid(cfg: RunConfig, parameter: str):
    if cfg["scan"]["parameter"] == parameter:
        return cfg.scan_grid()
    _, k = UNITS[parameter]
    return tuple(float(v) / k for v in DEFAULT_GRIDS[parameter])


def _scan_kw(cfg: RunConfig):
    kw = dict(workers=cfg["run"]["workers"], seed=cfg.seed)
    if cfg["detection"]["measure"]:
        kw.update(detection=cfg.detection(), n_ions=cfg["detection"]["n_ions"])
    return kw


def _curve_out(cfg, command, curve: EfficiencyCurve, out: Path, plot: bool, xlabel: str):
    unit, k = UNITS[curve.parameter]
    curve.metadata = {"summary": f"peak {curve.peak():.6f} at {curve.argmax() * k:.6g} {unit}".rstrip(),
                      **curve.metadata}
    text = "\n".join(config_header(cfg, command)) + "\n" + curve.to_csv()
    written = [out / f"{command}.csv"]
    atomic_write(written[0], text)
    if plot:
        from . import plotting
        x = curve.values * k
        ys = {"model": (curve.efficiencies, "o-")}
        meas = [r[2] for r in curve.rows]
        if all(m is not None for m in meas):
            ys["simulated measurement"] = (np.array(meas), "s")
        written += plotting.save(plotting.curve_figure(x, ys, xlabel, command), out / command,
                                 cfg.formats())
    return written


def cmd_simulate(cfg, out, plot):
    model = cfg.model()
    times = np.linspace(model.start, model.end, cfg["run"]["samples"])
    res = evolve(model, pure_state(Level.D32), times)
    pops = res.populations()
    o850, o854 = model.pulses.rabi(times)
    header = config_header(cfg, "simulate") + [f"# transfer_efficiency = {res.efficiency:.12f}",
                                                f"# steps = {res.n_steps} rejected = {res.n_rejected}"]
    coh = res.samples[:, Level.D32, Level.D52]
    cols = ["t_us"] + [f"pop_{Level(i).name}" for i in range(N_LEVELS)] + [
        "re_rho_D32_D52", "im_rho_D32_D52", "omega_850_mhz", "omega_854_mhz"]
    rows = np.column_stack([times * 1e6, pops, coh.real, coh.imag, o850 / MHZ, o854 / MHZ])
    path = out / "simulate.csv"
    atomic_write(path, table_csv(header, cols, rows))
    written = [path]
    if plot:
        from . import plotting
        written += plotting.save(plotting.trajectory_figure(times * 1e6, pops, o850 / MHZ, o854 / MHZ),
                                 out / "simulate", cfg.formats())
    print(f"transfer efficiency {res.efficiency:.6f}")
    return written


def _scan_cmd(parameter, xlabel):
    def run(cfg, out, plot):
        command = {"delay": "scan-delay", "two_photon_detuning": "scan-detuning",
                   "width": "scan-width"}[parameter]
        model = cfg.model(single_pair=True)
        ratio = cfg["scan"]["delay_ratio"] if parameter == "width" else None
        spec = ScanSpec(parameter, _grid(cfg, parameter), model, delay_ratio=ratio)
        curve = scan(spec, **_scan_kw(cfg))
        unit, k = UNITS[parameter]
        print(f"peak {curve.peak():.6f} at {curve.argmax() * k:.6g} {unit}")
        return _curve_out(cfg, command, curve, out, plot, xlabel)
    return run


def cmd_pulse_train(cfg, out, plot):
    n = cfg["pulses"]["n_pairs"]
    grid = tuple(float(i) for i in range(1, n + 1))
    spec = ScanSpec("n_pairs", grid, cfg.model(single_pair=True), spacing=cfg.pair_spacing())
    curve = scan(spec, **_scan_kw(cfg))
    final = curve.rows[-1][1]
    # odd-length trains end in D5/2, so the longest one gives the per-pair figure
    k = n if n % 2 else n - 1
    last_odd = curve.rows[k - 1][1]
    per_pair = last_odd ** (1.0 / k) if last_odd > 0 else 0.0
    curve.metadata["per_pair_efficiency"] = f"{per_pair:.12f} (from {k} pairs)"
    curve.metadata["pair_spacing_us"] = f"{cfg.pair_spacing() * 1e6:.10g}"
    print(f"D5/2 population after {n} pairs {final:.6f}; per pair {per_pair:.6f}")
    return _curve_out(cfg, "pulse-train", curve, out, plot, "number of pulse pairs")


def cmd_string_scan(cfg, out, plot):
    string = cfg.ion_string()
    spec = ScanSpec("delay", _grid(cfg, "delay"), cfg.model(single_pair=True))
    curves = string_scan(string, spec, **_scan_kw(cfg))
    header = config_header(cfg, "string-scan") + [
        f"# ion {i + 1} position_um = {x * 1e6:.6f}" for i, x in enumerate(string.positions)]
    rows = []
    for i, c in enumerate(curves):
        for v, e, m in c.rows:
            rows.append([f"{i + 1}", f"{v * 1e6:.10g}", f"{e:.12f}", "" if m is None else f"{m:.12f}"])
    path = out / "string-scan.csv"
    atomic_write(path, table_csv(header, ["ion", "param", "model_efficiency",
                                          "measured_efficiency"], rows))
    written = [path]
    if cfg["detection"]["measure"]:
        written.append(_string_readout(cfg, curves, out))
    for i, c in enumerate(curves):
        print(f"ion {i + 1}: peak {c.peak():.6f} at {c.argmax() * 1e6:.6g} us")
    if plot:
        from . import plotting
        x = curves[0].values * 1e6
        ys = {f"ion {i + 1}": (c.efficiencies, "-") for i, c in enumerate(curves)}
        written += plotting.save(plotting.curve_figure(x, ys, "pulse delay (us)", "string-scan"),
                                 out / "string-scan", cfg.formats())
    return written


def _string_readout(cfg, curves, out: Path) -> Path:
    """Single-shot camera readout of every ion at the delay where the string average peaks."""
    mean = np.mean([c.efficiencies for c in curves], axis=0)
    j = int(np.argmax(mean))
    ps = [min(max(c.rows[j][1], 0.0), 1.0) for c in curves]
    dcfg = cfg.detection()
    counts = det.per_ion_readout(ps, dcfg, [cfg.seed, 1])
    thr = det.discrimination_threshold(dcfg)
    header = config_header(cfg, "string-scan readout") + [
        f"# delta_tau_us = {curves[0].rows[j][0] * 1e6:.10g}",
        f"# threshold_counts = {thr:.6g}"]
    rows = [[f"{i + 1}", f"{p:.12f}", f"{n}", "dark" if n < thr else "bright"]
            for i, (p, n) in enumerate(zip(ps, counts))]
    path = out / "string-readout.csv"
    atomic_write(path, table_csv(header, ["ion", "p_shelved", "counts", "state"], rows))
    return path


def cmd_optimize(cfg, out, plot):
    res = optimize_pulses(cfg.bounds(), cfg.model())
    header = config_header(cfg, "optimize") + [
        f"# delta_tau_us = {res.delta_tau * 1e6:.10g}",
        f"# sigma_us = {res.sigma * 1e6:.10g}",
        f"# efficiency = {res.efficiency:.12f}",
        f"# warning = {str(res.warning).lower()} ({res.message})",
    ]
    rows = [[f"{k}", f"{dt * 1e6:.10g}", f"{s * 1e6:.10g}", f"{e:.12f}"] for k, dt, s, e in res.trace]
    path = out / "optimize.csv"
    atomic_write(path, table_csv(header, ["start", "delta_tau_us", "sigma_us", "efficiency"], rows))
    print(f"delta_tau* {res.delta_tau * 1e6:.4f} us, sigma* {res.sigma * 1e6:.4f} us, "
          f"efficiency* {res.efficiency:.6f}" + (f"  WARNING: {res.message}" if res.warning else ""))
    written = [path]
    if plot:
        from . import plotting
        import matplotlib.pyplot as plt
        fig, ax = plt.subplots(figsize=(6, 4))
        tr = np.array([[dt, s, e] for _, dt, s, e in res.trace])
        sc = ax.scatter(tr[:, 0] * 1e6, tr[:, 1] * 1e6, c=tr[:, 2], s=12, cmap="viridis")
        ax.plot(res.delta_tau * 1e6, res.sigma * 1e6, "r*", ms=12)
        ax.set_xlabel("pulse delay (us)")
        ax.set_ylabel("sigma (us)")
        fig.colorbar(sc, label="transfer efficiency")
        fig.tight_layout()
        written += plotting.save(fig, out / "optimize", cfg.formats())
    return written


def cmd_detect(cfg, out, plot):
    d = cfg["detection"]
    dcfg = cfg.detection()
    L, S, B = det.measure_many(d["p_shelved"], d["n_ions"], dcfg, cfg.seed, d["n_trials"])
    with np.errstate(divide="ignore", invalid="ignore"):
        est = np.where(L > B, (L - S) / np.where(L > B, L - B, 1), np.nan)
    ok = np.isfinite(est)
    mean = float(np.mean(est[ok])) if ok.any() else math.nan
    se = float(np.std(est[ok], ddof=1) / math.sqrt(ok.sum())) if ok.sum() > 1 else math.nan
    truth = det.decay_during_detection(d["p_shelved"], dcfg)
    header = config_header(cfg, "detect") + [
        f"# decay_corrected_shelved_fraction = {truth:.12f}",
        f"# estimator_mean = {mean:.12f}",
        f"# estimator_standard_error = {se:.12f}",
        f"# trials_with_L_not_above_B = {int((~ok).sum())}",
    ]
    rows = [[f"{i}", f"{l}", f"{s}", f"{b}", "" if not np.isfinite(e) else f"{e:.12f}"]
            for i, (l, s, b, e) in enumerate(zip(L, S, B, est))]
    path = out / "detect.csv"
    atomic_write(path, table_csv(header, ["trial", "L", "S", "B", "estimator"], rows))
    print(f"estimator mean {mean:.6f} +- {se:.6f} (decay-corrected truth {truth:.6f})")
    written = [path]
    if plot:
        from . import plotting
        written += plotting.save(plotting.histogram_figure(est[ok], truth), out / "detect",
                                 cfg.formats())
    return written


def cmd_envelopes(cfg, out, plot):
    pulses = cfg.pulses()
    times = np.linspace(pulses.start, max(p.center + 4 * p.sigma for _, p in pulses.pulses()),
                        cfg["run"]["samples"])
    env = envelope_trace(pulses, times)
    adia = adiabaticity_trace(pulses, times)
    rows = np.column_stack([times * 1e6, env[:, 1] / MHZ, env[:, 2] / MHZ, adia.theta, adia.ratio])
    header = config_header(cfg, "envelopes") + [
        f"# max_adiabaticity_ratio = {adia.max_ratio():.6g}"]
    path = out / "envelopes.csv"
    atomic_write(path, table_csv(header, ["t_us", "omega_850_mhz", "omega_854_mhz", "theta",
                                          "adiabaticity_ratio"], rows))
    written = [path]
    if plot:
        from . import plotting
        written += plotting.save(plotting.envelope_figure(times * 1e6, env[:, 1] / MHZ,
                                                          env[:, 2] / MHZ, adia.ratio),
                                 out / "envelopes", cfg.formats())
    return written


COMMANDS = {
    "simulate": (cmd_simulate, "single trajectory with populations over time"),
    "scan-delay": (_scan_cmd("delay", "pulse delay (us)"), "efficiency versus pulse delay"),
    "scan-detuning": (_scan_cmd("two_photon_detuning", "two-photon detuning / 2pi (MHz)"),
                      "efficiency versus two-photon detuning"),
    "scan-width": (_scan_cmd("width", "pulse width sigma (us)"), "efficiency versus pulse width"),
    "pulse-train": (cmd_pulse_train, "alternating multi-pair train"),
    "string-scan": (cmd_string_scan, "per-ion delay scans across an ion string"),
    "optimize": (cmd_optimize, "multi-start simplex search over delay and width"),
    "detect": (cmd_detect, "Monte-Carlo fluorescence readout and efficiency estimator"),
    "envelopes": (cmd_envelopes, "pulse envelopes and adiabaticity trace"),
}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="stirapsim", description="Five-level STIRAP simulator.")
    ap.add_argument("--version", action="version", version=version())
    sub = ap.add_subparsers(dest="command", required=True, metavar="command")
    for name, (_, help_) in COMMANDS.items():
        p = sub.add_parser(name, help=help_)
        p.add_argument("--config", type=Path, help="INI file in lab units")
        p.add_argument("--preset", choices=sorted(PRESETS))
        p.add_argument("--out", type=Path, help="output directory (default from [output])")
        p.add_argument("--seed", type=int, help="overrides [run] seed")
        p.add_argument("--plot", action="store_true", help="also write vector figures")
    return ap


def load(args) -> RunConfig:
    cfg = parse_config(args.config, args.preset) if args.config else resolve(preset=args.preset)
    if args.seed is not None:
        raw = {sec: dict(keys) for sec, keys in cfg.raw.items()}
        raw["run"]["seed"] = str(args.seed)
        cfg = resolve(raw)
    return cfg


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load(args)
        out = args.out if args.out is not None else Path(cfg["output"]["directory"])
        out.mkdir(parents=True, exist_ok=True)
        written = COMMANDS[args.command][0](cfg, out, args.plot)
    except ConfigError as exc:
        print(f"stirapsim: config error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # every failure surfaces with context, never a traceback dump
        print(f"stirapsim {args.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    for p in written:
        print(f"wrote {p}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
