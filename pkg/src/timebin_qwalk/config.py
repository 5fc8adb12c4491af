"""Run configuration files (YAML).

Every key is optional; see ``README.md`` for the full schema.  Angles are in
degrees in the file and radians everywhere else.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
import yaml

from .analysis import DriftModel, LossComponent, default_loss_components
from .kerr import GateConfig, PumpPulse
from .operators import CRYSTAL_LOSS_DB, CoinParams, StepConfig, StepSchedule, db_to_transmission
from .prepare import InputKind, InputSpec
from .state import DEFAULT_BIN_SPACING_PS

OUT_ENV_VAR = "TIMEBIN_QWALK_OUT"
DEFAULT_STEPS = 18


class ConfigError(ValueError):
    """Invalid configuration; ``key`` is the dotted path of the offending entry."""

    def __init__(self, key: str, message: str):
        super().__init__(f"config key '{key}': {message}")
        self.key = key


@dataclass(frozen=True)
class TraceSettings:
    signal_fwhm: float = 0.3
    scan_step: float = 0.05
    background: float = 0.0


@dataclass(frozen=True)
class StabilitySettings:
    drift: DriftModel = field(default_factory=DriftModel)
    calibrate: bool = False
    target_fidelity: float = 0.97
    calibration_seeds: int = 100


@dataclass(frozen=True)
class RunConfig:
    input: InputSpec = field(default_factory=InputSpec)
    schedule: StepSchedule = field(default_factory=lambda: StepSchedule.uniform(DEFAULT_STEPS))
    bin_spacing: float = DEFAULT_BIN_SPACING_PS
    gate: GateConfig = field(default_factory=GateConfig)
    pump: PumpPulse = field(default_factory=PumpPulse)
    calibrate_pump: bool = True
    trace: TraceSettings = field(default_factory=TraceSettings)
    stability: StabilitySettings = field(default_factory=StabilitySettings)
    variance_fit: tuple[float, float | None] = (5.0, None)
    budget: tuple[LossComponent, ...] = field(default_factory=lambda: tuple(default_loss_components(0)))
    budget_crystals: int | None = None
    crystal_loss_db: float = CRYSTAL_LOSS_DB
    outputs: Path = Path("out")
    emit_plots: bool = False
    seed: int = 0
    metadata: dict = field(default_factory=lambda: {"mean_photon_number": 0.8})

    @property
    def n_steps(self) -> int:
        return len(self.schedule)

    def fit_range(self) -> tuple[float, float]:
        lo, hi = self.variance_fit
        return lo, float(self.n_steps) if hi is None else hi

    def loss_components(self) -> list[LossComponent]:
        """Configured elements plus one entry for the walk crystals."""
        comps = list(self.budget)
        crystals = self.n_steps if self.budget_crystals is None else self.budget_crystals
        if crystals:
            comps.append(LossComponent("alpha-BBO crystal", self.crystal_loss_db, crystals))
        return comps


_TOP_KEYS = {"steps", "schedule", "input", "grid", "gate", "pump", "trace", "drift",
             "variance", "budget", "outputs", "emit_plots", "seed", "metadata"}


def _section(raw: dict, key: str, allowed: set[str]) -> dict:
    value = raw.get(key, {})
    if value is None:
        return {}
    if not isinstance(value, dict):
        raise ConfigError(key, "expected a mapping")
    unknown = set(value) - allowed
    if unknown:
        bad = sorted(unknown)[0]
        raise ConfigError(f"{key}.{bad}", "unknown key")
    return value


def _num(section: dict, key: str, prefix: str, default, kind=float):
    if key not in section:
        return default
    value = section[key]
    if value is None and default is None:
        return None
    try:
        if kind is int:
            if isinstance(value, bool) or int(value) != value:
                raise ValueError
            return int(value)
        if kind is bool:
            if not isinstance(value, bool):
                raise ValueError
            return value
        out = float(value)
        if not np.isfinite(out):
            raise ValueError
        return out
    except (TypeError, ValueError):
        raise ConfigError(f"{prefix}.{key}" if prefix else key,
                          f"expected {kind.__name__}, got {value!r}") from None


def _step(entry: dict, defaults: dict, where: str) -> StepConfig:
    allowed = {"omega_deg", "gamma_deg", "loss_db", "shift"}
    if not isinstance(entry, dict):
        raise ConfigError(where, "expected a mapping")
    unknown = set(entry) - allowed
    if unknown:
        raise ConfigError(f"{where}.{sorted(unknown)[0]}", "unknown key")
    merged = {**defaults, **entry}
    omega = _num(merged, "omega_deg", where, 90.0)
    gamma = _num(merged, "gamma_deg", where, 0.0)
    loss = _num(merged, "loss_db", where, CRYSTAL_LOSS_DB)
    shift = _num(merged, "shift", where, True, bool)
    if loss > 0:
        raise ConfigError(f"{where}.loss_db", "loss must be <= 0 dB")
    return StepConfig(CoinParams.from_degrees(omega, gamma), db_to_transmission(loss), shift)


def _schedule(raw: dict) -> StepSchedule:
    sched = _section(raw, "schedule", {"defaults", "steps"})
    defaults = sched.get("defaults") or {}
    if not isinstance(defaults, dict):
        raise ConfigError("schedule.defaults", "expected a mapping")
    _step(defaults, {}, "schedule.defaults")
    listed = sched.get("steps") or []
    if not isinstance(listed, list):
        raise ConfigError("schedule.steps", "expected a list of step mappings")
    n = _num(raw, "steps", "", len(listed) if listed else DEFAULT_STEPS, int)
    if n < 0:
        raise ConfigError("steps", "must be >= 0")
    if len(listed) > n:
        raise ConfigError("schedule.steps", f"{len(listed)} entries for a {n}-step walk")
    entries = list(listed) + [{}] * (n - len(listed))
    return StepSchedule(tuple(_step(e, defaults, f"schedule.steps[{i}]")
                              for i, e in enumerate(entries)))


def _input(raw: dict) -> InputSpec:
    sec = _section(raw, "input", {"kind", "alpha_re", "alpha_im", "beta_re", "beta_im",
                                  "k", "nu_deg", "polarization", "entries"})
    kind = sec.get("kind", "single_bin")
    try:
        kind = InputKind(kind)
    except ValueError:
        raise ConfigError("input.kind", f"unknown kind {kind!r}") from None
    try:
        if kind is InputKind.SINGLE_BIN:
            alpha = complex(_num(sec, "alpha_re", "input", 1.0), _num(sec, "alpha_im", "input", 0.0))
            beta = complex(_num(sec, "beta_re", "input", 0.0), _num(sec, "beta_im", "input", 0.0))
            try:
                return InputSpec.single_bin(alpha, beta)
            except ValueError as exc:
                raise ConfigError("input.alpha_re", str(exc)) from None
        if kind is InputKind.TWO_BIN:
            k = _num(sec, "k", "input", 1, int)
            if k < 1:
                raise ConfigError("input.k", "must be >= 1")
            nu = np.deg2rad(_num(sec, "nu_deg", "input", 0.0))
            return InputSpec.two_bin(k, nu, sec.get("polarization", "H"))
        entries = []
        for i, e in enumerate(sec.get("entries") or []):
            where = f"input.entries[{i}]"
            if not isinstance(e, dict):
                raise ConfigError(where, "expected a mapping")
            entries.append((e.get("polarization", "H"), _num(e, "bin", where, 0, int),
                            complex(_num(e, "re", where, 0.0), _num(e, "im", where, 0.0))))
        return InputSpec.explicit(entries)
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError("input", str(exc)) from None


def _gate(raw: dict) -> tuple[GateConfig, PumpPulse, bool]:
    g = _section(raw, "gate", {"theta_deg", "n2", "lambda_s_nm", "length_m",
                               "walkoff_ps_per_m", "z_steps"})
    p = _section(raw, "pump", {"shape", "fwhm_ps", "peak_intensity"})
    z_steps = _num(g, "z_steps", "gate", 2001, int)
    if z_steps < 3 or z_steps % 2 == 0:
        raise ConfigError("gate.z_steps", "must be an odd integer >= 3")
    values = dict(theta=np.deg2rad(_num(g, "theta_deg", "gate", 45.0)),
                  n2=_num(g, "n2", "gate", 2.6e-20),
                  lambda_s=_num(g, "lambda_s_nm", "gate", 720.0) * 1e-9,
                  fiber_length=_num(g, "length_m", "gate", 0.10),
                  walkoff=_num(g, "walkoff_ps_per_m", "gate", 10.0),
                  z_steps=z_steps)
    try:
        gate = GateConfig(**values)
    except ValueError as exc:
        raise ConfigError("gate", str(exc)) from None
    peak = p.get("peak_intensity")
    calibrate = peak is None or peak == "auto"
    peak = 0.0 if calibrate else _num(p, "peak_intensity", "pump", 0.0)
    fwhm = _num(p, "fwhm_ps", "pump", 0.5)
    try:
        pump = PumpPulse(peak_intensity=peak, fwhm=fwhm, shape=p.get("shape", "gaussian"))
    except ValueError as exc:
        raise ConfigError("pump", str(exc)) from None
    return gate, pump, calibrate


def parse_config(raw: dict | None, base_dir: Path | None = None) -> RunConfig:
    """Validate a decoded YAML mapping into a :class:`RunConfig`."""
    raw = raw or {}
    if not isinstance(raw, dict):
        raise ConfigError("<root>", "expected a mapping at the top level")
    unknown = set(raw) - _TOP_KEYS
    if unknown:
        raise ConfigError(sorted(unknown)[0], "unknown key")

    grid = _section(raw, "grid", {"bin_spacing_ps"})
    spacing = _num(grid, "bin_spacing_ps", "grid", DEFAULT_BIN_SPACING_PS)
    if spacing <= 0:
        raise ConfigError("grid.bin_spacing_ps", "must be > 0")

    tr = _section(raw, "trace", {"signal_fwhm_ps", "scan_step_ps", "background"})
    trace = TraceSettings(_num(tr, "signal_fwhm_ps", "trace", 0.3),
                          _num(tr, "scan_step_ps", "trace", 0.05),
                          _num(tr, "background", "trace", 0.0))
    for key, value in (("signal_fwhm_ps", trace.signal_fwhm), ("scan_step_ps", trace.scan_step)):
        if value <= 0:
            raise ConfigError(f"trace.{key}", "must be > 0")
    if trace.background < 0:
        raise ConfigError("trace.background", "must be >= 0")

    seed = _num(raw, "seed", "", 0, int)
    dr = _section(raw, "drift", {"sigma_gamma", "sigma_omega", "samples", "sample_interval_h",
                                 "calibrate", "target_fidelity", "calibration_seeds"})
    try:
        drift = DriftModel(_num(dr, "sigma_gamma", "drift", 0.0),
                           _num(dr, "sigma_omega", "drift", 0.0), seed,
                           _num(dr, "samples", "drift", 50, int),
                           _num(dr, "sample_interval_h", "drift", 1.0))
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError("drift", str(exc)) from None
    target = _num(dr, "target_fidelity", "drift", 0.97)
    if not 0 < target < 1:
        raise ConfigError("drift.target_fidelity", "must lie in (0, 1)")
    cal_seeds = _num(dr, "calibration_seeds", "drift", 100, int)
    if cal_seeds < 1:
        raise ConfigError("drift.calibration_seeds", "must be >= 1")
    stability = StabilitySettings(drift, _num(dr, "calibrate", "drift", False, bool), target,
                                  cal_seeds)

    schedule = _schedule(raw)
    var = _section(raw, "variance", {"fit_min", "fit_max"})
    fit = (_num(var, "fit_min", "variance", 5.0), _num(var, "fit_max", "variance", None))

    bud = _section(raw, "budget", {"components", "crystals", "crystal_loss_db"})
    if "components" in bud:
        comps = []
        for i, c in enumerate(bud["components"] or []):
            where = f"budget.components[{i}]"
            if not isinstance(c, dict) or "name" not in c:
                raise ConfigError(where, "expected a mapping with 'name' and 'loss_db'")
            try:
                comps.append(LossComponent(str(c["name"]), _num(c, "loss_db", where, 0.0),
                                           _num(c, "count", where, 1, int)))
            except ConfigError:
                raise
            except ValueError as exc:
                raise ConfigError(where, str(exc)) from None
    else:
        comps = default_loss_components(0)
    if bud.get("crystals", 0) is None or "components" not in bud:
        crystals = _num(bud, "crystals", "budget", None, int)   # None: one per walk step
    else:
        crystals = _num(bud, "crystals", "budget", 0, int)
    if crystals is not None and crystals < 0:
        raise ConfigError("budget.crystals", "must be >= 0")
    crystal_loss = _num(bud, "crystal_loss_db", "budget", CRYSTAL_LOSS_DB)
    if crystal_loss > 0:
        raise ConfigError("budget.crystal_loss_db", "loss must be <= 0 dB")

    outputs = raw.get("outputs", "out")
    if not isinstance(outputs, str):
        raise ConfigError("outputs", "expected a directory path")
    out_path = Path(outputs)
    if base_dir is not None and not out_path.is_absolute():
        out_path = base_dir / out_path

    metadata = raw.get("metadata", {"mean_photon_number": 0.8})
    if not isinstance(metadata, dict):
        raise ConfigError("metadata", "expected a mapping")

    gate, pump, calibrate = _gate(raw)
    return RunConfig(input=_input(raw), schedule=schedule, bin_spacing=spacing, gate=gate,
                     pump=pump, calibrate_pump=calibrate, trace=trace, stability=stability,
                     variance_fit=fit, budget=tuple(comps), budget_crystals=crystals,
                     crystal_loss_db=crystal_loss, outputs=out_path,
                     emit_plots=_num(raw, "emit_plots", "", False, bool), seed=seed,
                     metadata=dict(metadata))


def load_config(path: str | os.PathLike | None) -> RunConfig:
    """Read a YAML config file; ``None`` gives the defaults.

    Relative output directories resolve against the config file's directory.
    """
    if path is None:
        return parse_config({})
    path = Path(path)
    try:
        raw = yaml.safe_load(path.read_text())
    except yaml.YAMLError as exc:
        raise ConfigError("<file>", f"YAML parse error: {exc}") from None
    except OSError as exc:
        raise ConfigError("<file>", f"cannot read {path}: {exc.strerror}") from None
    return parse_config(raw, base_dir=path.parent)


def with_overrides(cfg: RunConfig, steps: int | None = None, seed: int | None = None,
                   out: str | None = None) -> RunConfig:
    """Apply command-line overrides; the output directory also honours ``$TIMEBIN_QWALK_OUT``."""
    if steps is not None:
        if steps < 0:
            raise ConfigError("steps", "must be >= 0")
        base = cfg.schedule.steps
        template = base[-1] if base else StepConfig()
        sched = StepSchedule(tuple(base[:steps]) + (template,) * max(0, steps - len(base)))
        cfg = replace(cfg, schedule=sched)
    if seed is not None:
        cfg = replace(cfg, seed=seed,
                      stability=replace(cfg.stability,
                                        drift=replace(cfg.stability.drift, seed=seed)))
    env_out = os.environ.get(OUT_ENV_VAR)
    if out is not None:
        cfg = replace(cfg, outputs=Path(out))
    elif env_out:
        cfg = replace(cfg, outputs=Path(env_out))
    return cfg
