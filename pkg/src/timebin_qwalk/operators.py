"""Coin, shift and step operators for the time-bin walk, plus a dense reference."""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .state import BinGrid, Polarization, ShiftOverflowError, WalkerState

CRYSTAL_LOSS_DB = -0.044
DEFAULT_TRANSMISSION = 10 ** (CRYSTAL_LOSS_DB / 10)
UNITARITY_TOL = 1e-12


def db_to_transmission(loss_db: float) -> float:
    return 10 ** (loss_db / 10)


@dataclass(frozen=True)
class CoinParams:
    """Coin rotation ``omega`` and phase ``gamma``, both in radians."""

    omega: float = np.pi / 2
    gamma: float = 0.0

    def __post_init__(self):
        if not (np.isfinite(self.omega) and np.isfinite(self.gamma)):
            raise ValueError(f"coin parameters must be finite, got {self}")

    @classmethod
    def from_degrees(cls, omega_deg: float = 90.0, gamma_deg: float = 0.0) -> "CoinParams":
        return cls(np.deg2rad(omega_deg), np.deg2rad(gamma_deg))


HADAMARD = CoinParams(np.pi / 2, 0.0)


@dataclass(frozen=True)
class StepConfig:
    coin: CoinParams = HADAMARD
    transmission: float = DEFAULT_TRANSMISSION
    shift_enabled: bool = True

    def __post_init__(self):
        if not 0 < self.transmission <= 1:
            raise ValueError(f"transmission must lie in (0, 1], got {self.transmission!r}")

    @property
    def loss_db(self) -> float:
        return 10 * np.log10(self.transmission)


@dataclass(frozen=True)
class StepSchedule:
    steps: tuple[StepConfig, ...] = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "steps", tuple(self.steps))

    @classmethod
    def uniform(cls, n_steps: int, coin: CoinParams = HADAMARD,
                transmission: float = DEFAULT_TRANSMISSION) -> "StepSchedule":
        if n_steps < 0:
            raise ValueError("number of steps must be >= 0")
        return cls(tuple(StepConfig(coin, transmission) for _ in range(n_steps)))

    @classmethod
    def hadamard(cls, n_steps: int, transmission: float = 1.0) -> "StepSchedule":
        return cls.uniform(n_steps, HADAMARD, transmission)

    def __len__(self) -> int:
        return len(self.steps)

    def __iter__(self):
        return iter(self.steps)

    def __getitem__(self, idx):
        if isinstance(idx, slice):
            return StepSchedule(self.steps[idx])
        return self.steps[idx]

    @property
    def n_shifts(self) -> int:
        return sum(1 for s in self.steps if s.shift_enabled)

    def lossless(self) -> "StepSchedule":
        return StepSchedule(tuple(replace(s, transmission=1.0) for s in self.steps))

    def with_coins(self, coins: Sequence[CoinParams]) -> "StepSchedule":
        return StepSchedule(tuple(replace(s, coin=c) for s, c in zip(self.steps, coins)))


def coin_matrix(params: CoinParams) -> np.ndarray:
    """2x2 coin acting on ``(H, V)`` amplitudes."""
    c = np.cos(params.omega / 2)
    s = np.sin(params.omega / 2)
    phase = np.exp(1j * params.gamma)
    return np.array([[c, phase * s],
                     [np.conj(phase) * s, -c]], dtype=np.complex128)


def is_unitary(mat: np.ndarray, tol: float = UNITARITY_TOL) -> bool:
    mat = np.asarray(mat)
    return bool(np.max(np.abs(mat.conj().T @ mat - np.eye(mat.shape[0]))) < tol)


def apply_coin(state: WalkerState, params: CoinParams) -> WalkerState:
    return WalkerState(coin_matrix(params) @ state.amplitudes, state.grid)


def apply_shift(state: WalkerState) -> WalkerState:
    amps = state.amplitudes
    if amps[Polarization.V, -1] != 0:
        raise ShiftOverflowError(
            f"V amplitude in last bin {state.grid.bin_count - 1}; grid too small for another shift")
    out = np.zeros_like(amps)
    out[Polarization.H] = amps[Polarization.H]
    out[Polarization.V, 1:] = amps[Polarization.V, :-1]
    return WalkerState(out, state.grid)


def apply_step(state: WalkerState, cfg: StepConfig) -> WalkerState:
    """One crystal: coin first, then the polarization-dependent delay, then loss."""
    out = apply_coin(state, cfg.coin)
    if cfg.shift_enabled:
        out = apply_shift(out)
    if cfg.transmission != 1:
        out = out.scaled(np.sqrt(cfg.transmission))
    return out


def required_bins(state: WalkerState, schedule: StepSchedule) -> int:
    return max(state.occupied_extent(), 1) + schedule.n_shifts


def evolve(initial: WalkerState, schedule: StepSchedule) -> list[WalkerState]:
    """States after 0, 1, ..., N steps."""
    need = required_bins(initial, schedule)
    if initial.grid.bin_count < need:
        raise ShiftOverflowError(
            f"{len(schedule)}-step walk needs {need} bins, grid has {initial.grid.bin_count}")
    states = [initial]
    for cfg in schedule:
        states.append(apply_step(states[-1], cfg))
    return states


def dense_walk_oracle(schedule: StepSchedule, grid: BinGrid) -> np.ndarray:
    """Full ``2B x 2B`` product of per-step matrices, basis index ``pol * B + m``.

    Built from explicit kronecker products so it shares no code with :func:`evolve`.
    V amplitude shifted out of the last bin is discarded.
    """
    B = grid.bin_count
    eye = np.eye(B)
    up = np.eye(B, k=-1)  # |t_{m+1}><t_m|
    proj_h = np.array([[1, 0], [0, 0]])
    proj_v = np.array([[0, 0], [0, 1]])
    total = np.eye(2 * B, dtype=np.complex128)
    for cfg in schedule:
        half = cfg.coin.omega / 2
        coin = np.array([[np.cos(half), np.exp(1j * cfg.coin.gamma) * np.sin(half)],
                         [np.exp(-1j * cfg.coin.gamma) * np.sin(half), -np.cos(half)]])
        C = np.kron(coin, eye)
        if cfg.shift_enabled:
            S = np.kron(proj_h, eye) + np.kron(proj_v, up)
        else:
            S = np.eye(2 * B)
        total = np.sqrt(cfg.transmission) * (S @ C) @ total
    return total
