"""Figures of merit: fidelity, distance, spreading, loss budgets and drift stability."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from importlib import resources
from typing import Iterable, Sequence

import numpy as np
from scipy import optimize

from .operators import StepSchedule, evolve
from .prepare import InputSpec, prepare
from .state import BinGrid, Distribution, Polarization, WalkerState, probabilities

NORMALIZATION_TOL = 1e-6


def _check_normalized(*dists: Distribution) -> None:
    for d in dists:
        total = d.total()
        if abs(total - 1) > NORMALIZATION_TOL:
            raise ValueError(f"distribution sums to {total:.9g}, expected 1")


def _aligned(p: Distribution, q: Distribution) -> tuple[np.ndarray, np.ndarray]:
    n = max(p.grid.bin_count, q.grid.bin_count)
    return p.padded(n).probabilities, q.padded(n).probabilities


def fidelity(p: Distribution, q: Distribution, n: int | None = None) -> float:
    """Classical fidelity ``(sum sqrt(p q))**2`` over bins ``0..n`` and both polarizations.

    Residual normalization error is divided out, so ``fidelity(p, p) == 1`` exactly.
    """
    _check_normalized(p, q)
    a, b = _aligned(p, q)
    if n is not None:
        if n + 1 > a.shape[1]:
            a = np.pad(a, ((0, 0), (0, n + 1 - a.shape[1])))
            b = np.pad(b, ((0, 0), (0, n + 1 - b.shape[1])))
        a, b = a[:, :n + 1], b[:, :n + 1]
    overlap = np.sum(np.sqrt(a * b))
    value = overlap * overlap / (np.sum(a) * np.sum(b))
    return float(min(value, 1.0))


def distance(p: Distribution, q: Distribution) -> float:
    """Total-variation distance ``0.5 * sum |p - q|``."""
    _check_normalized(p, q)
    a, b = _aligned(p, q)
    return float(min(0.5 * np.sum(np.abs(a - b)), 1.0))


def variance(dist: Distribution) -> float:
    """Variance of the bin index, polarization marginalized."""
    _check_normalized(dist)
    P = dist.marginal()
    i = np.arange(P.size)
    mean = np.dot(i, P)
    return float(np.dot((i - mean) ** 2, P))


def classical_rw_distribution(n: int, bin_spacing: float | None = None) -> Distribution:
    """Binomial position after ``n`` fair steps of 0 or +1 bin.

    A classical walker carries no polarization; its mass is stored in the H row.
    """
    if n < 0:
        raise ValueError("n must be >= 0")
    probs = np.array([math.comb(n, i) for i in range(n + 1)], dtype=np.float64) / 2.0 ** n
    grid = BinGrid(n + 1) if bin_spacing is None else BinGrid(n + 1, bin_spacing)
    return Distribution.from_marginal(probs, grid)


def growth_exponent(variances: Iterable[tuple[float, float]],
                    fit_range: tuple[float, float] | None = None) -> float:
    """Slope of ``log(variance)`` against ``log(step)`` by least squares."""
    pts = [(n, v) for n, v in variances
           if n > 0 and v > 0 and (fit_range is None or fit_range[0] <= n <= fit_range[1])]
    if len(pts) < 3:
        raise ValueError(f"need at least 3 points with n > 0 and variance > 0, got {len(pts)}")
    n, v = np.array(pts, dtype=np.float64).T
    slope, _ = np.polyfit(np.log(n), np.log(v), 1)
    return float(slope)


def variance_series(initial: WalkerState, schedule: StepSchedule) -> list[tuple[int, float, float]]:
    """``(step, quantum variance, classical variance)`` for every step of the walk."""
    rows = []
    for n, state in enumerate(evolve(initial, schedule)):
        rows.append((n, variance(probabilities(state).renormalized()),
                     variance(classical_rw_distribution(n))))
    return rows


def peak_asymmetry(dist: Distribution, center: float | None = None) -> float:
    """``|P_left - P_right| / (P_left + P_right)`` for the tallest bins either side of ``center``.

    ``center`` defaults to the middle of the grid.
    """
    P = dist.marginal()
    if center is None:
        center = (P.size - 1) / 2
    i = np.arange(P.size)
    left, right = P[i < center].max(), P[i > center].max()
    return float(abs(left - right) / (left + right))


def peak_separation(dist: Distribution, center: float | None = None) -> int:
    """Bin distance between the tallest bins either side of ``center``."""
    P = dist.marginal()
    if center is None:
        center = (P.size - 1) / 2
    i = np.arange(P.size)
    left = int(np.argmax(np.where(i < center, P, -1.0)))
    right = int(np.argmax(np.where(i > center, P, -1.0)))
    return right - left


@dataclass(frozen=True)
class LossComponent:
    name: str
    loss_db: float
    count: int = 1

    def __post_init__(self):
        if not self.loss_db <= 0:
            raise ValueError(f"{self.name}: loss_db must be <= 0, got {self.loss_db!r}")
        if int(self.count) != self.count or self.count < 1:
            raise ValueError(f"{self.name}: count must be a positive integer, got {self.count!r}")

    @property
    def total_db(self) -> float:
        return self.count * self.loss_db


# Per-element losses of the bench setup; crystals are the low-loss AR-coated type.
SETUP_LOSSES = (
    LossComponent("silver mirror", -0.088),
    LossComponent("half-wave plate", -0.223),
    LossComponent("quarter-wave plate", -0.223),
    LossComponent("nanoparticle thin-film polarizer", -0.044),
    LossComponent("telescope", -0.094),
    LossComponent("dichroic mirror", -0.044),
    LossComponent("Kerr gate (aspheric lenses + 10 cm SMF)", -1.192),
    LossComponent("polarizing beamsplitter", -0.706),
    LossComponent("spectral filters", -1.871),
    LossComponent("1 m SMF to detector", -0.706),
    LossComponent("avalanche photodiode", -2.218),
)
AR_CRYSTAL_LOSS_DB = -0.044
ALT_AR_CRYSTAL_LOSS_DB = -0.269


def default_loss_components(n_crystals: int = 18) -> list[LossComponent]:
    comps = list(SETUP_LOSSES)
    if n_crystals:
        comps.append(LossComponent("alpha-BBO crystal", AR_CRYSTAL_LOSS_DB, n_crystals))
    return comps


def loss_budget(components: Iterable[LossComponent]) -> tuple[float, float]:
    """Total loss in dB and the matching linear efficiency."""
    total_db = math.fsum(c.total_db for c in components)
    return total_db, 10 ** (total_db / 10)


@dataclass(frozen=True)
class DriftModel:
    """Gaussian random walk on every step's coin parameters.

    ``sigma_gamma`` and ``sigma_omega`` are radians per sample; samples are
    taken at ``sample_interval * k`` hours for ``k = 1..samples``.
    """

    sigma_gamma: float = 0.0
    sigma_omega: float = 0.0
    seed: int = 0
    samples: int = 50
    sample_interval: float = 1.0

    def __post_init__(self):
        if self.sigma_gamma < 0 or self.sigma_omega < 0:
            raise ValueError("drift sigmas must be >= 0")
        if self.samples < 1:
            raise ValueError("samples must be >= 1")

    def offsets(self, n_steps: int) -> np.ndarray:
        """Accumulated ``(samples, n_steps, 2)`` offsets, last axis ``(omega, gamma)``."""
        rng = np.random.default_rng(self.seed)
        inc = rng.standard_normal((self.samples, n_steps, 2))
        return np.cumsum(inc, axis=0) * np.array([self.sigma_omega, self.sigma_gamma])

    @property
    def times(self) -> np.ndarray:
        return self.sample_interval * np.arange(1, self.samples + 1)


def final_amplitudes_batch(initial: WalkerState, schedule: StepSchedule,
                           omega_offsets=None, gamma_offsets=None) -> np.ndarray:
    """Final amplitudes ``(batch, 2, B)`` for many perturbed copies of one schedule.

    Offsets have shape ``(batch, N)`` and are added to each step's coin angles.
    """
    N = len(schedule)
    base_omega = np.array([s.coin.omega for s in schedule])
    base_gamma = np.array([s.coin.gamma for s in schedule])
    if omega_offsets is None and gamma_offsets is None:
        omega_offsets = np.zeros((1, N))
    shape = np.shape(omega_offsets if omega_offsets is not None else gamma_offsets)
    omega = base_omega + (np.zeros(shape) if omega_offsets is None else omega_offsets)
    gamma = base_gamma + (np.zeros(shape) if gamma_offsets is None else gamma_offsets)

    B = initial.grid.bin_count
    psi = np.broadcast_to(initial.amplitudes, (shape[0], 2, B)).copy()
    for n, cfg in enumerate(schedule):
        c = np.cos(omega[:, n] / 2)[:, None]
        s = np.sin(omega[:, n] / 2)[:, None]
        e = np.exp(1j * gamma[:, n])[:, None]
        h, v = psi[:, 0], psi[:, 1]
        new_h = c * h + e * s * v
        new_v = np.conj(e) * s * h - c * v
        if cfg.shift_enabled:
            if np.any(new_v[:, -1] != 0):
                raise ValueError("grid too small for the perturbed walk")
            new_v = np.concatenate([np.zeros((shape[0], 1)), new_v[:, :-1]], axis=1)
        psi = np.stack([new_h, new_v], axis=1) * np.sqrt(cfg.transmission)
    return psi


def _component_fidelities(final: np.ndarray, theory: Distribution) -> np.ndarray:
    """Per-polarization fidelity ``(batch, 2)`` of perturbed walks against ``theory``."""
    probs = np.abs(final) ** 2
    q = theory.probabilities
    out = np.full((final.shape[0], 2), np.nan)
    for pol in Polarization:
        qt = q[pol].sum()
        if qt <= 0:
            continue
        pt = probs[:, pol].sum(axis=1)
        overlap = np.sum(np.sqrt(probs[:, pol] * q[pol]), axis=1)
        out[:, pol] = np.minimum(overlap ** 2 / (pt * qt), 1.0)
    return out


def _walk_setup(schedule: StepSchedule, spec: InputSpec, grid: BinGrid | None):
    grid = grid or BinGrid.for_walk(schedule.n_shifts, spec.extent)
    initial = prepare(spec, grid)
    theory = probabilities(evolve(initial, schedule)[-1])
    return initial, theory


def stability_run(schedule: StepSchedule, spec: InputSpec, drift: DriftModel,
                  grid: BinGrid | None = None) -> list[tuple[float, float, float]]:
    """``(time_h, fidelity_H, fidelity_V)`` for a walk whose coins drift over time.

    Each polarization component is renormalized on its own before comparison
    with the drift-free walk.
    """
    initial, theory = _walk_setup(schedule, spec, grid)
    offsets = drift.offsets(len(schedule))
    final = final_amplitudes_batch(initial, schedule, offsets[..., 0], offsets[..., 1])
    fids = _component_fidelities(final, theory)
    return [(float(t), float(fh), float(fv)) for t, (fh, fv) in zip(drift.times, fids)]


def expected_endpoint_fidelity(schedule: StepSchedule, spec: InputSpec, sigma_gamma: float,
                               sigma_omega: float = 0.0, samples: int = 50,
                               seeds: Sequence[int] = range(100)) -> np.ndarray:
    """Seed-averaged endpoint fidelity of the ``(H, V)`` components."""
    initial, theory = _walk_setup(schedule, spec, None)
    ends = np.stack([DriftModel(sigma_gamma, sigma_omega, s, samples).offsets(len(schedule))[-1]
                     for s in seeds])
    final = final_amplitudes_batch(initial, schedule, ends[..., 0], ends[..., 1])
    return np.mean(_component_fidelities(final, theory), axis=0)


def calibrate_drift_sigma(schedule: StepSchedule, spec: InputSpec, target: float = 0.97,
                          samples: int = 50, seeds: Sequence[int] = range(100),
                          omega_ratio: float = 0.0, xtol: float = 1e-7) -> float:
    """``sigma_gamma`` putting the weaker component's expected endpoint fidelity at ``target``.

    Bisection over the seed-averaged fidelity after ``samples`` drift samples;
    ``sigma_omega`` is tied to it as ``omega_ratio * sigma_gamma``.
    """
    if not 0 < target < 1:
        raise ValueError("target fidelity must lie in (0, 1)")

    def excess(sigma):
        fids = expected_endpoint_fidelity(schedule, spec, sigma, omega_ratio * sigma,
                                          samples, seeds)
        return float(np.nanmin(fids)) - target

    hi = 1e-3
    while excess(hi) > 0:
        hi *= 2
        if hi > 10:
            raise ValueError("drift never lowers the fidelity to the target")
    return float(optimize.bisect(excess, 0.0, hi, xtol=xtol))


@dataclass(frozen=True)
class LandscapeEntry:
    year: int
    reference: str
    steps: int
    loss_db_per_step: float | None
    fidelity: float | None
    distance: float | None
    photons: int
    platform: str


def _opt_float(text: str) -> float | None:
    return float(text) if text.strip() else None


def load_landscape() -> list[LandscapeEntry]:
    """Bundled survey of discrete-time photonic walk experiments."""
    text = resources.files("timebin_qwalk").joinpath("data/landscape.csv").read_text()
    return [
        LandscapeEntry(int(r["year"]), r["reference"], int(r["steps"]),
                       _opt_float(r["loss_db_per_step"]), _opt_float(r["fidelity"]),
                       _opt_float(r["distance"]), int(r["photons"]), r["platform"])
        for r in csv.DictReader(io.StringIO(text))
    ]
