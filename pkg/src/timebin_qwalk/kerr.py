"""Kerr-gate readout: cross-phase-modulation phase, gate efficiency, delay scans.

Times are in picoseconds, lengths in meters, walkoff in ps/m.  Pump intensity
is in arbitrary units consistent with ``n2``; only the product enters through
the nonlinear phase, and :func:`calibrate_pump` sets it from the target phase.

The pump delay is referenced to the middle of the gating fiber: a pump at
delay ``T`` sits at ``T - walkoff * (z - L/2)`` in the signal frame, so the
gate window is centered on ``T = 0`` whatever the walkoff.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, replace

import numpy as np
from scipy import integrate, optimize

from .state import BinGrid, Distribution, Polarization, fmt

_FWHM_TO_SIGMA = 1 / (2 * np.sqrt(2 * np.log(2)))
PUMP_SHAPES = ("gaussian", "rectangular")


@dataclass(frozen=True)
class PumpPulse:
    peak_intensity: float = 0.0
    fwhm: float = 0.5
    shape: str = "gaussian"

    def __post_init__(self):
        if not self.peak_intensity >= 0:
            raise ValueError(f"peak_intensity must be >= 0, got {self.peak_intensity!r}")
        if not self.fwhm > 0:
            raise ValueError(f"pump fwhm must be > 0, got {self.fwhm!r}")
        if self.shape not in PUMP_SHAPES:
            raise ValueError(f"pump shape must be one of {PUMP_SHAPES}, got {self.shape!r}")

    def profile(self, t):
        """Intensity at signal-frame time ``t`` (ps) for a pump centered on zero."""
        t = np.asarray(t, dtype=np.float64)
        if self.shape == "gaussian":
            return self.peak_intensity * np.exp(-4 * np.log(2) * (t / self.fwhm) ** 2)
        return np.where(np.abs(t) <= self.fwhm / 2, self.peak_intensity, 0.0)

    @property
    def half_extent(self) -> float:
        """Half-width beyond which the profile is negligible (or zero)."""
        if self.shape == "gaussian":
            return 3.0 * self.fwhm
        return self.fwhm / 2


@dataclass(frozen=True)
class GateConfig:
    theta: float = np.pi / 4
    n2: float = 2.6e-20
    lambda_s: float = 720e-9
    fiber_length: float = 0.10
    walkoff: float = 10.0
    z_steps: int = 2001

    def __post_init__(self):
        if not self.fiber_length > 0:
            raise ValueError(f"fiber_length must be > 0, got {self.fiber_length!r}")
        if not self.lambda_s > 0:
            raise ValueError(f"lambda_s must be > 0, got {self.lambda_s!r}")
        if int(self.z_steps) != self.z_steps or self.z_steps < 3 or self.z_steps % 2 == 0:
            raise ValueError(f"z_steps must be an odd integer >= 3, got {self.z_steps!r}")

    @property
    def phase_prefactor(self) -> float:
        """``8 pi n2 / (3 lambda_s)``."""
        return 8 * np.pi * self.n2 / (3 * self.lambda_s)

    @property
    def sweep(self) -> float:
        """Total pump-signal slip across the fiber, ps."""
        return abs(self.walkoff) * self.fiber_length

    def refined(self) -> "GateConfig":
        """Same gate with the z-grid interval count doubled."""
        return replace(self, z_steps=2 * self.z_steps - 1)


def nonlinear_phase(T, cfg: GateConfig, pump: PumpPulse):
    """Cross-phase-modulation phase at pump delay ``T`` (scalar or array, ps).

    Composite Simpson quadrature over ``cfg.z_steps`` points along the fiber.
    """
    T = np.asarray(T, dtype=np.float64)
    z = np.linspace(0.0, cfg.fiber_length, cfg.z_steps)
    frame = T[..., None] - cfg.walkoff * (z - cfg.fiber_length / 2)
    integral = integrate.simpson(pump.profile(frame), x=z, axis=-1)
    out = cfg.phase_prefactor * integral
    return float(out) if out.ndim == 0 else out


def gate_efficiency(T, cfg: GateConfig, pump: PumpPulse):
    phase = nonlinear_phase(T, cfg, pump)
    eta = np.sin(2 * cfg.theta) ** 2 * np.sin(np.asarray(phase) / 2) ** 2
    eta = np.clip(eta, 0.0, 1.0)
    return float(eta) if np.ndim(eta) == 0 else eta


def gate_support(cfg: GateConfig, pump: PumpPulse) -> tuple[float, float]:
    """Delay interval outside which the gate is effectively closed."""
    half = pump.half_extent + cfg.sweep / 2
    return -half, half


def max_phase(cfg: GateConfig, pump: PumpPulse, coarse_points: int = 401) -> float:
    """Maximum of the nonlinear phase over pump delay."""
    lo, hi = gate_support(cfg, pump)
    grid = np.linspace(lo, hi, coarse_points)
    phases = nonlinear_phase(grid, cfg, pump)
    i = int(np.argmax(phases))
    best = float(phases[i])
    step = grid[1] - grid[0]
    res = optimize.minimize_scalar(
        lambda t: -nonlinear_phase(t, cfg, pump),
        bounds=(grid[i] - step, grid[i] + step), method="bounded",
        options={"xatol": 1e-10 * max(1.0, pump.fwhm)})
    return max(best, float(-res.fun))


def calibrate_pump(cfg: GateConfig, shape: str = "gaussian", fwhm: float = 0.5,
                   target_phase: float = np.pi, tol: float = 1e-6) -> PumpPulse:
    """Pump whose peak nonlinear phase equals ``target_phase``, by bisection on intensity."""
    unit_peak = max_phase(cfg, PumpPulse(1.0, fwhm, shape))
    if not (np.isfinite(unit_peak) and unit_peak > 0):
        raise ValueError("gate produces no nonlinear phase; cannot bracket the pump intensity")

    def excess(intensity):
        return max_phase(cfg, PumpPulse(intensity, fwhm, shape)) - target_phase

    guess = target_phase / unit_peak
    lo, hi = 0.5 * guess, 2.0 * guess
    for _ in range(60):
        if excess(lo) < 0 < excess(hi):
            break
        lo, hi = lo / 2, hi * 2
    else:
        raise ValueError("could not bracket the pump intensity")
    intensity = optimize.bisect(excess, lo, hi, xtol=1e-300, rtol=4 * np.finfo(float).eps,
                                maxiter=200)
    pump = PumpPulse(intensity, fwhm, shape)
    if abs(excess(intensity)) >= tol:
        raise ValueError(f"pump calibration missed the target phase by {excess(intensity):.3g}")
    return pump


@dataclass(frozen=True, eq=False)
class TemporalTrace:
    """Gated intensity sampled at strictly increasing pump delays (ps)."""

    delays: np.ndarray
    intensities: np.ndarray

    def __post_init__(self):
        d = np.array(self.delays, dtype=np.float64, copy=True)
        v = np.array(self.intensities, dtype=np.float64, copy=True)
        if d.ndim != 1 or d.shape != v.shape:
            raise ValueError("delays and intensities must be 1-D arrays of equal length")
        if d.size and np.any(np.diff(d) <= 0):
            raise ValueError("delays must be strictly increasing")
        if np.any(v < 0):
            raise ValueError("intensities must be non-negative")
        d.setflags(write=False)
        v.setflags(write=False)
        object.__setattr__(self, "delays", d)
        object.__setattr__(self, "intensities", v)

    def __len__(self) -> int:
        return self.delays.size

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["delay_ps", "intensity"])
        for d, v in zip(self.delays, self.intensities):
            writer.writerow([fmt(d), fmt(v)])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "TemporalTrace":
        rows = list(csv.DictReader(io.StringIO(text)))
        return cls([float(r["delay_ps"]) for r in rows], [float(r["intensity"]) for r in rows])


def default_scan(grid: BinGrid, step: float = 0.05, margin_bins: float = 1.0) -> np.ndarray:
    """Uniform delay grid from one bin before ``t0`` to one bin past the last bin."""
    start = int(np.floor(-margin_bins * grid.bin_spacing / step))
    stop = int(np.ceil(((grid.bin_count - 1) + margin_bins) * grid.bin_spacing / step))
    return np.arange(start, stop + 1) * step


def signal_pulse(t, fwhm: float):
    """Unit-area Gaussian signal pulse."""
    sigma = fwhm * _FWHM_TO_SIGMA
    return np.exp(-0.5 * (np.asarray(t) / sigma) ** 2) / (sigma * np.sqrt(2 * np.pi))


def synthesize_trace(dist: Distribution, cfg: GateConfig, pump: PumpPulse,
                     signal_fwhm: float = 0.3, scan=None, background: float = 0.0,
                     polarization=None) -> TemporalTrace:
    """Gated intensity versus pump delay for the photons in ``dist``.

    Each bin carries a Gaussian pulse of width ``signal_fwhm`` at its delay; the
    trace is the sum of each pulse's overlap with the gate window.  With
    ``polarization`` set, only that component reaches the gate.
    """
    if scan is None:
        scan = default_scan(dist.grid)
    scan = np.asarray(scan, dtype=np.float64)
    if scan.size == 0:
        raise ValueError("empty delay scan")
    if np.any(np.diff(scan) <= 0):
        raise ValueError("scan delays must be strictly increasing")
    if not signal_fwhm > 0:
        raise ValueError("signal_fwhm must be > 0")
    if background < 0:
        raise ValueError("background must be >= 0")

    if polarization is None:
        weights = dist.marginal()
    else:
        weights = dist.component(polarization)

    lo, hi = gate_support(cfg, pump)
    du = min(signal_fwhm, pump.fwhm) / 40
    u = np.linspace(lo, hi, max(int(np.ceil((hi - lo) / du)) + 1, 3))
    eta = gate_efficiency(u, cfg, pump)

    signal_reach = 6 * signal_fwhm * _FWHM_TO_SIGMA
    trace = np.full(scan.shape, float(background))
    for m in np.flatnonzero(weights > 0):
        center = dist.grid.delay(m)
        near = np.flatnonzero(np.abs(scan - center) <= max(-lo, hi) + signal_reach)
        if near.size == 0:
            continue
        offsets = scan[near] - center
        kernel = signal_pulse(u[None, :] + offsets[:, None], signal_fwhm)
        trace[near] += weights[m] * integrate.trapezoid(eta[None, :] * kernel, u, axis=1)
    return TemporalTrace(scan, trace)


def discretize_trace(trace: TemporalTrace, grid: BinGrid, polarization=Polarization.H) -> Distribution:
    """Sample the trace at each bin delay; values fill one polarization row, unnormalized."""
    if len(trace) == 0:
        raise ValueError("empty trace")
    pol = Polarization.parse(polarization)
    delays = trace.delays
    slack = 0.5 * (np.median(np.diff(delays)) if len(trace) > 1 else 0.0) + 1e-9
    targets = grid.delays
    outside = (targets < delays[0] - slack) | (targets > delays[-1] + slack)
    if np.any(outside):
        bad = int(np.flatnonzero(outside)[0])
        raise ValueError(f"trace does not cover bin {bad} at {targets[bad]:g} ps")
    idx = np.clip(np.searchsorted(delays, targets), 1, max(len(trace) - 1, 1))
    if len(trace) > 1:
        left_closer = (targets - delays[idx - 1]) <= (delays[idx] - targets)
        idx = np.where(left_closer, idx - 1, idx)
    else:
        idx = np.zeros_like(idx)
    p = np.zeros((2, grid.bin_count))
    p[pol] = trace.intensities[idx]
    return Distribution(p, grid)


def read_out(dist: Distribution, cfg: GateConfig, pump: PumpPulse, signal_fwhm: float = 0.3,
             scan=None, background: float = 0.0):
    """Scan both polarization components and rebuild a normalized distribution.

    Returns ``(readout, trace_h, trace_v)``.  A readout with no gated signal at
    all (closed gate) is returned as the all-zero distribution.
    """
    traces = {}
    parts = []
    for pol in Polarization:
        traces[pol] = synthesize_trace(dist, cfg, pump, signal_fwhm, scan, background, pol)
        parts.append(discretize_trace(traces[pol], dist.grid, pol))
    combined = parts[0] + parts[1]
    readout = combined.renormalized() if combined.total() > 0 else combined
    return readout, traces[Polarization.H], traces[Polarization.V]
