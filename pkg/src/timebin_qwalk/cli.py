"""``timebin-qwalk`` command-line front end.

Each command computes all of its outputs in memory first and only then writes
them, so a failed run leaves no partial files behind.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
import tempfile
from pathlib import Path

import numpy as np

from . import analysis, kerr
from .config import ConfigError, RunConfig, load_config, with_overrides
from .operators import dense_walk_oracle, evolve
from .prepare import prepare
from .state import BinGrid, Distribution, WalkerState, fmt, probabilities

COMMANDS = ("walk", "trace", "variance", "stability", "budget")


def _csv(header, rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([fmt(v) if isinstance(v, (float, np.floating)) else v for v in row])
    return buf.getvalue()


def _walk_grid(cfg: RunConfig) -> BinGrid:
    return BinGrid.for_walk(cfg.schedule.n_shifts, cfg.input.extent, cfg.bin_spacing)


def _initial(cfg: RunConfig) -> WalkerState:
    return prepare(cfg.input, _walk_grid(cfg))


def _normalized(state: WalkerState) -> Distribution:
    return probabilities(state).renormalized()


def run_walk(cfg: RunConfig) -> tuple[dict, str]:
    initial = _initial(cfg)
    grid = initial.grid
    states = evolve(initial, cfg.schedule)
    extent = cfg.input.extent
    dists = [_normalized(s) for s in states]

    rows = []
    shifts = 0
    for n, d in enumerate(dists):
        if n > 0 and cfg.schedule[n - 1].shift_enabled:
            shifts += 1
        for m, _, pol, p in d.rows(max_bin=extent - 1 + shifts):
            rows.append((n, m, pol, p))

    fids = []
    vec = initial.to_vector()
    for n, d in enumerate(dists):
        ref = WalkerState.from_vector(dense_walk_oracle(cfg.schedule[:n], grid) @ vec, grid)
        fids.append((n, analysis.fidelity(d, _normalized(ref))))

    files = {
        "evolution.csv": _csv(["step", "bin", "polarization", "probability"], rows),
        "fidelity.csv": _csv(["step", "fidelity"], fids),
    }
    if cfg.emit_plots:
        from . import plotting

        files["evolution.svg"] = plotting.evolution_figure(dists, "step-by-step evolution")
        files["fidelity.svg"] = plotting.series_figure(
            [n for n, _ in fids], {"simulation vs. dense reference": [f for _, f in fids]},
            "step", "fidelity")
    summary = (f"walk: {len(cfg.schedule)} steps, {grid.bin_count} bins, "
               f"final fidelity vs dense reference {fids[-1][1]:.12f}")
    return files, summary


def _gate_pump(cfg: RunConfig) -> kerr.PumpPulse:
    if cfg.calibrate_pump:
        return kerr.calibrate_pump(cfg.gate, cfg.pump.shape, cfg.pump.fwhm)
    return cfg.pump


def run_trace(cfg: RunConfig) -> tuple[dict, str]:
    initial = _initial(cfg)
    direct = _normalized(evolve(initial, cfg.schedule)[-1])
    pump = _gate_pump(cfg)
    scan = kerr.default_scan(direct.grid, cfg.trace.scan_step)
    readout, trace_h, trace_v = kerr.read_out(direct, cfg.gate, pump, cfg.trace.signal_fwhm,
                                              scan, cfg.trace.background)
    files = {
        "trace_H.csv": trace_h.to_csv(),
        "trace_V.csv": trace_v.to_csv(),
        "readout.csv": readout.to_csv(),
    }
    if cfg.emit_plots:
        from . import plotting

        files["trace.svg"] = plotting.trace_figure(trace_h, trace_v)
    if readout.total() > 0:
        tv = f"{analysis.distance(readout, direct):.3e}"
    else:
        tv = "n/a (no gated signal)"
    summary = (f"trace: {len(scan)} delays, peak phase calibrated to "
               f"{kerr.max_phase(cfg.gate, pump):.9f} rad, readout TV distance {tv}")
    return files, summary


def run_variance(cfg: RunConfig) -> tuple[dict, str]:
    series = analysis.variance_series(_initial(cfg), cfg.schedule)
    lo, hi = cfg.fit_range()
    report = {"fit_min": lo, "fit_max": hi}
    for key, col in (("exponent_quantum", 1), ("exponent_classical", 2)):
        try:
            report[key] = analysis.growth_exponent([(r[0], r[col]) for r in series], (lo, hi))
        except ValueError:
            report[key] = None
    files = {
        "variance.csv": _csv(["step", "variance_quantum", "variance_classical"], series),
        "variance_fit.json": json.dumps(report, indent=2, sort_keys=True) + "\n",
    }
    if cfg.emit_plots:
        from . import plotting

        files["variance.svg"] = plotting.series_figure(
            [r[0] for r in series],
            {"quantum walk": [r[1] for r in series], "classical walk": [r[2] for r in series]},
            "step", "variance (bins$^2$)")
    q = report["exponent_quantum"]
    summary = f"variance: quantum exponent {q:.4f}" if q is not None else \
        "variance: too few steps for an exponent fit"
    return files, summary


def run_stability(cfg: RunConfig) -> tuple[dict, str]:
    st = cfg.stability
    drift = st.drift
    if st.calibrate:
        sigma = analysis.calibrate_drift_sigma(cfg.schedule, cfg.input, st.target_fidelity,
                                               drift.samples, range(st.calibration_seeds))
        drift = analysis.DriftModel(sigma, drift.sigma_omega, drift.seed, drift.samples,
                                    drift.sample_interval)
    series = analysis.stability_run(cfg.schedule, cfg.input, drift)
    files = {"stability.csv": _csv(["time_h", "fidelity_H", "fidelity_V"], series)}
    if cfg.emit_plots:
        from . import plotting

        files["stability.svg"] = plotting.series_figure(
            [r[0] for r in series], {"H": [r[1] for r in series], "V": [r[2] for r in series]},
            "time (h)", "fidelity")
    lows = np.nanmin(np.array([r[1:] for r in series]), axis=0)
    summary = (f"stability: sigma_gamma {drift.sigma_gamma:.6g} rad/sample, "
               f"min fidelity H {lows[0]:.4f}, V {lows[1]:.4f}")
    return files, summary


def run_budget(cfg: RunConfig) -> tuple[dict, str]:
    comps = cfg.loss_components()
    total_db, eff = analysis.loss_budget(comps)
    rows = [(c.name, c.loss_db, c.count, c.total_db) for c in comps]
    width = max([len(c.name) for c in comps] + [9])
    lines = [f"{'component':<{width}}  {'dB each':>9}  {'count':>5}  {'dB total':>9}"]
    lines += [f"{c.name:<{width}}  {c.loss_db:>9.3f}  {c.count:>5d}  {c.total_db:>9.3f}" for c in comps]
    lines.append(f"total loss: {total_db:.3f} dB")
    lines.append(f"linear efficiency: {eff:.5f} ({100 * eff:.1f}%)")
    files = {"budget.csv": _csv(["component", "loss_db", "count", "total_db"], rows)}
    return files, "\n".join(lines)


RUNNERS = {"walk": run_walk, "trace": run_trace, "variance": run_variance,
           "stability": run_stability, "budget": run_budget}


def write_outputs(out_dir: Path, files: dict) -> list[Path]:
    """Write every file atomically (temp file + rename) into ``out_dir``."""
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    for name, content in files.items():
        data = content.encode() if isinstance(content, str) else content
        fd, tmp = tempfile.mkstemp(dir=out_dir, prefix=f".{name}.")
        try:
            with os.fdopen(fd, "wb") as fh:
                fh.write(data)
            os.replace(tmp, out_dir / name)
        except BaseException:
            Path(tmp).unlink(missing_ok=True)
            raise
        written.append(out_dir / name)
    return written


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="timebin-qwalk",
        description="Simulate time-bin photonic quantum walks and their Kerr-gate readout.")
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--config", type=Path, help="YAML run configuration")
    parser.add_argument("--out", help="output directory (overrides config and $TIMEBIN_QWALK_OUT)")
    parser.add_argument("--seed", type=int, help="random seed for drift runs")
    parser.add_argument("--steps", type=int, help="number of walk steps")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = with_overrides(load_config(args.config), args.steps, args.seed, args.out)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    try:
        files, summary = RUNNERS[args.command](cfg)
    except (ValueError, ArithmeticError) as exc:
        print(f"error: {args.command} failed: {exc}", file=sys.stderr)
        return 1
    try:
        written = write_outputs(cfg.outputs, files)
    except OSError as exc:
        print(f"error: cannot write outputs to {cfg.outputs}: {exc}", file=sys.stderr)
        return 1
    print(summary)
    for path in written:
        print(f"wrote {path}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
