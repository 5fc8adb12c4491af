import csv
import io
import json
from pathlib import Path

import numpy as np
import pytest

from conftest import path_sum_amplitudes
from timebin_qwalk.analysis import calibrate_drift_sigma
from timebin_qwalk.cli import main
from timebin_qwalk.config import OUT_ENV_VAR
from timebin_qwalk.kerr import TemporalTrace
from timebin_qwalk.operators import StepSchedule
from timebin_qwalk.prepare import InputSpec
from timebin_qwalk.state import Distribution

GOLDEN = Path(__file__).parent / "golden"


@pytest.fixture(autouse=True)
def _no_env_out(monkeypatch):
    monkeypatch.delenv(OUT_ENV_VAR, raising=False)


def run(tmp_path, command, config=None, *extra):
    args = [command, "--out", str(tmp_path / "out")]
    if config is not None:
        path = tmp_path / "run.yaml"
        path.write_text(config)
        args += ["--config", str(path)]
    return main(args + list(extra))


def read_rows(path):
    return list(csv.DictReader(io.StringIO(path.read_text())))


def test_walk_eighteen_steps(tmp_path):
    assert run(tmp_path, "walk") == 0
    out = tmp_path / "out"
    rows = read_rows(out / "evolution.csv")
    assert sorted({int(r["step"]) for r in rows}) == list(range(19))
    fids = read_rows(out / "fidelity.csv")
    assert len(fids) == 19
    assert all(abs(float(r["fidelity"]) - 1) < 1e-10 for r in fids)


def test_walk_zero_steps(tmp_path, capsys):
    assert run(tmp_path, "walk", None, "--steps", "0") == 0
    rows = read_rows(tmp_path / "out" / "evolution.csv")
    assert [(r["step"], r["bin"], r["polarization"], float(r["probability"])) for r in rows] == [
        ("0", "0", "H", 1.0), ("0", "0", "V", 0.0)]
    assert "0 steps" in capsys.readouterr().out


@pytest.mark.parametrize("n", [2, 18])
def test_walk_golden_files(tmp_path, n):
    assert run(tmp_path, "walk", None, "--steps", str(n)) == 0
    for name in ("evolution", "fidelity"):
        got = (tmp_path / "out" / f"{name}.csv").read_text()
        assert got == (GOLDEN / f"walk{n}_{name}.csv").read_text()


@pytest.mark.parametrize("n", [2, 18])
def test_golden_files_match_path_sum(n):
    # the pinned outputs were checked against an independent reference before freezing
    rows = read_rows(GOLDEN / f"walk{n}_evolution.csv")
    for k in range(n + 1):
        amps = path_sum_amplitudes([[1.0], [0.0]], [np.pi / 2] * k, [0.0] * k)
        probs = np.abs(amps) ** 2
        probs /= probs.sum()
        step_rows = [r for r in rows if int(r["step"]) == k]
        assert len(step_rows) == 2 * (k + 1)
        for r in step_rows:
            pol = 0 if r["polarization"] == "H" else 1
            assert float(r["probability"]) == pytest.approx(probs[pol, int(r["bin"])], abs=1e-12)


def test_walk_two_bin_sixteen_steps(tmp_path):
    cfg = "steps: 16\ninput: {kind: two_bin, k: 1, nu_deg: 0}\n"
    assert run(tmp_path, "walk", cfg) == 0
    rows = read_rows(tmp_path / "out" / "evolution.csv")
    last = [r for r in rows if r["step"] == "16"]
    assert {int(r["bin"]) for r in last} == set(range(18))
    total = sum(float(r["probability"]) for r in last)
    assert total == pytest.approx(1.0, abs=1e-12)
    assert float(read_rows(tmp_path / "out" / "fidelity.csv")[-1]["fidelity"]) == pytest.approx(1, abs=1e-10)


def test_trace_default_two_lobes(tmp_path):
    assert run(tmp_path, "trace") == 0
    out = tmp_path / "out"
    for pol in "HV":
        tr = TemporalTrace.from_csv((out / f"trace_{pol}.csv").read_text())
        assert tr.intensities.max() > 0
    readout = Distribution.from_csv((out / "readout.csv").read_text())
    assert readout.total() == pytest.approx(1.0, abs=1e-12)
    assert readout.grid.bin_count == 19


def test_trace_closed_gate_gives_zero(tmp_path):
    assert run(tmp_path, "trace", "gate: {theta_deg: 0}\n") == 0
    for pol in "HV":
        tr = TemporalTrace.from_csv((tmp_path / "out" / f"trace_{pol}.csv").read_text())
        assert np.all(tr.intensities == 0)
    assert Distribution.from_csv((tmp_path / "out" / "readout.csv").read_text()).total() == 0


def test_trace_zero_steps_single_peak(tmp_path):
    assert run(tmp_path, "trace", None, "--steps", "0") == 0
    tr = TemporalTrace.from_csv((tmp_path / "out" / "trace_H.csv").read_text())
    peak = tr.delays[np.argmax(tr.intensities)]
    assert abs(peak) < 1e-9
    local_max = (tr.intensities[1:-1] > tr.intensities[:-2]) & (tr.intensities[1:-1] >= tr.intensities[2:])
    assert local_max.sum() == 1


def test_variance_outputs(tmp_path):
    cfg = "input: {alpha_re: 0.7071067811865476, beta_im: 0.7071067811865476}\n"
    assert run(tmp_path, "variance", cfg) == 0
    rows = read_rows(tmp_path / "out" / "variance.csv")
    assert len(rows) == 19
    for r in rows:
        assert float(r["variance_classical"]) == pytest.approx(int(r["step"]) / 4, abs=1e-12)
    assert float(rows[2]["variance_quantum"]) == pytest.approx(0.5, abs=1e-12)
    fit = json.loads((tmp_path / "out" / "variance_fit.json").read_text())
    assert fit["exponent_quantum"] == pytest.approx(2.0, abs=0.15)
    assert fit["exponent_classical"] == pytest.approx(1.0, abs=0.01)
    assert (fit["fit_min"], fit["fit_max"]) == (5.0, 18.0)


def test_variance_too_short_for_fit(tmp_path):
    assert run(tmp_path, "variance", None, "--steps", "2") == 0
    fit = json.loads((tmp_path / "out" / "variance_fit.json").read_text())
    assert fit["exponent_quantum"] is None


def test_stability_without_drift_is_flat(tmp_path):
    assert run(tmp_path, "stability") == 0
    rows = read_rows(tmp_path / "out" / "stability.csv")
    assert len(rows) == 50
    assert all(float(r["fidelity_H"]) == 1.0 and float(r["fidelity_V"]) == 1.0 for r in rows)


def test_stability_calibrated_endpoint(tmp_path, capsys):
    # the calibration targets the seed-averaged endpoint; single seeds scatter around it
    assert run(tmp_path, "stability", "drift: {calibrate: true, calibration_seeds: 100}\n") == 0
    sigma = calibrate_drift_sigma(StepSchedule.uniform(18), InputSpec.single_bin(1, 0))
    assert f"sigma_gamma {sigma:.6g}" in capsys.readouterr().out
    ends = []
    for seed in range(100):
        assert run(tmp_path, "stability", f"drift: {{sigma_gamma: {sigma!r}}}\n", "--seed", str(seed)) == 0
        end = read_rows(tmp_path / "out" / "stability.csv")[-1]
        ends.append((float(end["fidelity_H"]), float(end["fidelity_V"])))
    mean = np.mean(ends, axis=0)
    assert np.all((mean >= 0.95) & (mean <= 1.0))
    assert mean.min() == pytest.approx(0.97, abs=1e-6)


def test_stability_seed_changes_output(tmp_path):
    cfg = "drift: {sigma_gamma: 0.02}\n"
    assert run(tmp_path, "stability", cfg, "--seed", "1") == 0
    a = (tmp_path / "out" / "stability.csv").read_text()
    assert run(tmp_path, "stability", cfg, "--seed", "2") == 0
    assert (tmp_path / "out" / "stability.csv").read_text() != a


def test_budget_default_report(tmp_path, capsys):
    assert run(tmp_path, "budget") == 0
    text = capsys.readouterr().out
    assert "total loss: -8.201 dB" in text
    assert "(15.1%)" in text
    rows = read_rows(tmp_path / "out" / "budget.csv")
    assert len(rows) == 12
    assert rows[-1]["count"] == "18"


def test_budget_single_crystal_and_empty(tmp_path, capsys):
    assert run(tmp_path, "budget", "budget: {components: [], crystals: 1}\n") == 0
    assert "linear efficiency: 0.98992" in capsys.readouterr().out
    assert run(tmp_path, "budget", "budget: {components: []}\n") == 0
    text = capsys.readouterr().out
    assert "total loss: 0.000 dB" in text and "(100.0%)" in text


@pytest.mark.parametrize("command", ["walk", "trace", "variance", "stability", "budget"])
def test_commands_are_deterministic(tmp_path, command):
    cfg = "steps: 6\ndrift: {sigma_gamma: 0.03, sigma_omega: 0.01}\nseed: 5\n"
    assert run(tmp_path, command, cfg) == 0
    out = tmp_path / "out"
    first = {p.name: p.read_bytes() for p in out.iterdir()}
    assert run(tmp_path, command, cfg) == 0
    assert {p.name: p.read_bytes() for p in out.iterdir()} == first


def test_bad_config_exits_nonzero_without_files(tmp_path, capsys):
    assert run(tmp_path, "walk", "gate: {thetaa_deg: 10}\n") == 2
    assert "gate.thetaa_deg" in capsys.readouterr().err
    assert not (tmp_path / "out").exists()


def test_numeric_error_exits_nonzero_without_files(tmp_path, capsys):
    cfg = "input: {kind: explicit, entries: [{bin: 0, re: 0.5}]}\n"
    assert run(tmp_path, "walk", cfg) == 1
    assert "squared norm" in capsys.readouterr().err
    assert not (tmp_path / "out").exists()


def test_env_var_sets_output_dir(tmp_path, monkeypatch):
    monkeypatch.setenv(OUT_ENV_VAR, str(tmp_path / "env"))
    assert main(["budget"]) == 0
    assert (tmp_path / "env" / "budget.csv").exists()


def test_unknown_command():
    with pytest.raises(SystemExit) as info:
        main(["dance"])
    assert info.value.code == 2


def test_plots_are_written(tmp_path):
    pytest.importorskip("matplotlib")
    cfg = "steps: 4\nemit_plots: true\n"
    for command, name in [("walk", "evolution.svg"), ("trace", "trace.svg"),
                          ("variance", "variance.svg"), ("stability", "stability.svg")]:
        assert run(tmp_path, command, cfg) == 0
        svg = (tmp_path / "out" / name).read_bytes()
        assert svg.lstrip().startswith(b"<?xml") and b"<svg" in svg


def test_plots_are_deterministic(tmp_path):
    pytest.importorskip("matplotlib")
    cfg = "steps: 3\nemit_plots: true\n"
    assert run(tmp_path, "walk", cfg) == 0
    first = (tmp_path / "out" / "evolution.svg").read_bytes()
    assert run(tmp_path, "walk", cfg) == 0
    assert (tmp_path / "out" / "evolution.svg").read_bytes() == first
