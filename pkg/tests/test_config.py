from pathlib import Path

import numpy as np
import pytest
import yaml

from timebin_qwalk.config import (
    DEFAULT_STEPS,
    OUT_ENV_VAR,
    ConfigError,
    load_config,
    parse_config,
    with_overrides,
)
from timebin_qwalk.operators import DEFAULT_TRANSMISSION, HADAMARD
from timebin_qwalk.prepare import InputKind


def test_defaults():
    cfg = parse_config({})
    assert cfg.n_steps == DEFAULT_STEPS
    assert all(s.coin == HADAMARD and s.transmission == DEFAULT_TRANSMISSION for s in cfg.schedule)
    assert cfg.input.kind is InputKind.SINGLE_BIN
    assert cfg.gate.theta == pytest.approx(np.pi / 4)
    assert cfg.calibrate_pump
    assert cfg.fit_range() == (5.0, 18.0)
    assert sum(c.count for c in cfg.loss_components()) == 11 + 18
    assert cfg.metadata["mean_photon_number"] == 0.8


def test_full_document():
    text = """
steps: 3
schedule:
  defaults: {omega_deg: 60, gamma_deg: 10, loss_db: 0}
  steps:
    - {omega_deg: 90}
    - {shift: false, loss_db: -0.1}
input: {kind: two_bin, k: 2, nu_deg: 180, polarization: V}
grid: {bin_spacing_ps: 5.0}
gate: {theta_deg: 30, length_m: 0.2, walkoff_ps_per_m: 0, z_steps: 101}
pump: {shape: rectangular, fwhm_ps: 1.0, peak_intensity: 1.0e+14}
trace: {signal_fwhm_ps: 0.2, scan_step_ps: 0.1, background: 0.001}
drift: {sigma_gamma: 0.01, samples: 10, calibrate: true}
variance: {fit_min: 2, fit_max: 3}
budget:
  components: [{name: mirror, loss_db: -0.1, count: 2}]
  crystals: 1
outputs: results
emit_plots: true
seed: 42
"""
    cfg = parse_config(yaml.safe_load(text), base_dir=Path("/cfgdir"))
    s = cfg.schedule
    assert len(s) == 3
    assert s[0].coin.omega == pytest.approx(np.pi / 2)
    assert s[0].coin.gamma == pytest.approx(np.deg2rad(10))
    assert s[0].transmission == 1.0
    assert not s[1].shift_enabled and s[1].transmission == pytest.approx(10 ** -0.01)
    assert s[2].coin.omega == pytest.approx(np.pi / 3)
    assert cfg.input.kind is InputKind.TWO_BIN and cfg.input.k == 2
    assert cfg.input.nu == pytest.approx(np.pi)
    assert cfg.bin_spacing == 5.0
    assert cfg.gate.theta == pytest.approx(np.pi / 6) and cfg.gate.z_steps == 101
    assert not cfg.calibrate_pump and cfg.pump.peak_intensity == 1e14
    assert cfg.trace.background == 0.001
    assert cfg.stability.calibrate and cfg.stability.drift.seed == 42
    assert cfg.fit_range() == (2.0, 3.0)
    assert [c.total_db for c in cfg.loss_components()] == [-0.2, pytest.approx(-0.044)]
    assert cfg.outputs == Path("/cfgdir/results")
    assert cfg.emit_plots


def test_null_means_default_where_allowed():
    cfg = parse_config({"steps": 6, "variance": {"fit_max": None}, "budget": {"crystals": None}})
    assert cfg.fit_range() == (5.0, 6.0)
    assert cfg.loss_components()[-1].count == 6
    with pytest.raises(ConfigError, match="gate.theta_deg"):
        parse_config({"gate": {"theta_deg": None}})


def test_explicit_input_entries():
    cfg = parse_config({"input": {"kind": "explicit", "entries": [
        {"polarization": "H", "bin": 0, "re": 0.6},
        {"polarization": "V", "bin": 1, "im": 0.8}]}})
    assert cfg.input.entries[1][2] == 0.8j
    assert cfg.input.extent == 2


@pytest.mark.parametrize("raw,key", [
    ({"stepz": 3}, "stepz"),
    ({"steps": -1}, "steps"),
    ({"steps": 2.5}, "steps"),
    ({"gate": {"theta": 45}}, "gate.theta"),
    ({"gate": {"z_steps": 100}}, "gate.z_steps"),
    ({"gate": {"length_m": "long"}}, "gate.length_m"),
    ({"schedule": {"steps": [{"omega": 1}]}}, "schedule.steps[0].omega"),
    ({"schedule": {"steps": [{"loss_db": 0.5}]}}, "schedule.steps[0].loss_db"),
    ({"steps": 1, "schedule": {"steps": [{}, {}]}}, "schedule.steps"),
    ({"input": {"kind": "three_bin"}}, "input.kind"),
    ({"input": {"kind": "two_bin", "k": 0}}, "input.k"),
    ({"input": {"alpha_re": 1, "beta_re": 1}}, "input.alpha_re"),
    ({"grid": {"bin_spacing_ps": 0}}, "grid.bin_spacing_ps"),
    ({"trace": {"signal_fwhm_ps": -1}}, "trace.signal_fwhm_ps"),
    ({"drift": {"target_fidelity": 1.2}}, "drift.target_fidelity"),
    ({"drift": {"calibrate": "yes"}}, "drift.calibrate"),
    ({"budget": {"components": [{"name": "x", "loss_db": 1}]}}, "budget.components[0]"),
    ({"emit_plots": 1}, "emit_plots"),
    ({"outputs": 3}, "outputs"),
    ({"pump": {"shape": "sech"}}, "pump"),
    ({"pump": {"fwhm_ps": "wide"}}, "pump.fwhm_ps"),
    ({"drift": {"samples": 1.5}}, "drift.samples"),
    ({"drift": {"samples": 0}}, "drift"),
    ({"drift": {"calibration_seeds": 0}}, "drift.calibration_seeds"),
    ({"budget": {"components": [{"name": "x", "count": "two"}]}}, "budget.components[0].count"),
])
def test_errors_name_the_key(raw, key):
    with pytest.raises(ConfigError) as info:
        parse_config(raw)
    assert info.value.key == key
    assert f"'{key}'" in str(info.value)


def test_load_config_file(tmp_path):
    path = tmp_path / "run.yaml"
    path.write_text("steps: 4\noutputs: here\n")
    cfg = load_config(path)
    assert cfg.n_steps == 4
    assert cfg.outputs == tmp_path / "here"
    assert load_config(None).n_steps == DEFAULT_STEPS


def test_load_config_bad_files(tmp_path):
    with pytest.raises(ConfigError, match="cannot read"):
        load_config(tmp_path / "missing.yaml")
    bad = tmp_path / "bad.yaml"
    bad.write_text("steps: [1,\n")
    with pytest.raises(ConfigError, match="YAML"):
        load_config(bad)
    listy = tmp_path / "list.yaml"
    listy.write_text("- 1\n- 2\n")
    with pytest.raises(ConfigError):
        load_config(listy)


def test_overrides(monkeypatch):
    monkeypatch.delenv(OUT_ENV_VAR, raising=False)
    cfg = parse_config({"steps": 4, "schedule": {"defaults": {"omega_deg": 30}}, "outputs": "cfg"})
    longer = with_overrides(cfg, steps=6)
    assert longer.n_steps == 6
    assert longer.schedule[5].coin.omega == pytest.approx(np.pi / 6)
    assert longer.fit_range() == (5.0, 6.0)
    assert with_overrides(cfg, steps=0).n_steps == 0
    with pytest.raises(ConfigError):
        with_overrides(cfg, steps=-2)
    seeded = with_overrides(cfg, seed=7)
    assert seeded.seed == 7 and seeded.stability.drift.seed == 7
    assert with_overrides(cfg).outputs == Path("cfg")

    monkeypatch.setenv(OUT_ENV_VAR, "/env/out")
    assert with_overrides(cfg).outputs == Path("/env/out")
    assert with_overrides(cfg, out="/cli/out").outputs == Path("/cli/out")


def test_documented_schema_parses():
    import re

    readme = (Path(__file__).parents[1] / "README.md").read_text()
    block = re.search(r"```yaml\n(.*?)```", readme, re.S).group(1)
    cfg = parse_config(yaml.safe_load(block))
    assert cfg.n_steps == DEFAULT_STEPS
    assert cfg.calibrate_pump
    assert [(c.name, c.count) for c in cfg.loss_components()] == [
        ("silver mirror", 1), ("alpha-BBO crystal", DEFAULT_STEPS)]
