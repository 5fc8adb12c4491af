"""Walker states on the polarization x time-bin Hilbert space.

Amplitudes and probabilities are stored densely as ``(2, bin_count)`` arrays
indexed ``[polarization, bin]``.  Row 0 is H, row 1 is V.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from enum import IntEnum
from typing import Iterable, Mapping

import numpy as np

#: Allowed excess of the squared norm above one.
NORM_EPS = 1e-9
#: Per-step norm drift allowed for lossless evolution.
CONSERVATION_EPS = 1e-12

DEFAULT_BIN_SPACING_PS = 4.3


class Polarization(IntEnum):
    H = 0
    V = 1

    @classmethod
    def parse(cls, value) -> "Polarization":
        if isinstance(value, Polarization):
            return value
        if isinstance(value, str):
            try:
                return cls[value.strip().upper()]
            except KeyError:
                raise ValueError(f"unknown polarization {value!r}") from None
        return cls(int(value))


class ShiftOverflowError(ValueError):
    """Raised when V amplitude would be shifted past the last time bin."""


@dataclass(frozen=True)
class BinGrid:
    """Uniformly spaced time bins; bin ``m`` sits at delay ``m * bin_spacing`` ps."""

    bin_count: int
    bin_spacing: float = DEFAULT_BIN_SPACING_PS

    def __post_init__(self):
        if int(self.bin_count) != self.bin_count or self.bin_count < 1:
            raise ValueError(f"bin_count must be a positive integer, got {self.bin_count!r}")
        if not np.isfinite(self.bin_spacing) or self.bin_spacing <= 0:
            raise ValueError(f"bin_spacing must be > 0, got {self.bin_spacing!r}")
        object.__setattr__(self, "bin_count", int(self.bin_count))
        object.__setattr__(self, "bin_spacing", float(self.bin_spacing))

    @classmethod
    def for_walk(cls, n_steps: int, input_extent: int = 1,
                 bin_spacing: float = DEFAULT_BIN_SPACING_PS) -> "BinGrid":
        """Smallest grid holding an ``n_steps`` walk from inputs in bins ``< input_extent``."""
        return cls(n_steps + input_extent, bin_spacing)

    @property
    def delays(self) -> np.ndarray:
        return np.arange(self.bin_count) * self.bin_spacing

    def delay(self, m: int) -> float:
        return m * self.bin_spacing

    def resized(self, bin_count: int) -> "BinGrid":
        return BinGrid(bin_count, self.bin_spacing)


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class WalkerState:
    amplitudes: np.ndarray
    grid: BinGrid

    def __post_init__(self):
        amps = np.array(self.amplitudes, dtype=np.complex128, copy=True)
        if amps.shape != (2, self.grid.bin_count):
            raise ValueError(
                f"amplitudes must have shape (2, {self.grid.bin_count}), got {amps.shape}")
        if not np.all(np.isfinite(amps)):
            raise ValueError("amplitudes must be finite")
        object.__setattr__(self, "amplitudes", _frozen(amps))

    def amplitude(self, pol, m: int) -> complex:
        return complex(self.amplitudes[Polarization.parse(pol), m])

    def norm_squared(self) -> float:
        return norm_squared(self)

    def probabilities(self) -> "Distribution":
        return probabilities(self)

    def scaled(self, factor: complex) -> "WalkerState":
        return WalkerState(self.amplitudes * factor, self.grid)

    def padded(self, bin_count: int) -> "WalkerState":
        """Same state on a grid of ``bin_count >= occupied extent`` bins."""
        extent = self.occupied_extent()
        if bin_count < extent:
            raise ValueError(f"state occupies {extent} bins, cannot fit in {bin_count}")
        amps = np.zeros((2, bin_count), dtype=np.complex128)
        keep = min(bin_count, self.grid.bin_count)
        amps[:, :keep] = self.amplitudes[:, :keep]
        return WalkerState(amps, self.grid.resized(bin_count))

    def occupied_extent(self) -> int:
        """One past the highest bin holding nonzero amplitude (0 for the zero state)."""
        occupied = np.flatnonzero(np.any(self.amplitudes != 0, axis=0))
        return int(occupied[-1]) + 1 if occupied.size else 0

    def to_vector(self) -> np.ndarray:
        """Flatten with index ``pol * bin_count + m``."""
        return self.amplitudes.reshape(-1).copy()

    @classmethod
    def from_vector(cls, vec: np.ndarray, grid: BinGrid) -> "WalkerState":
        return cls(np.asarray(vec).reshape(2, grid.bin_count), grid)


def make_state(entries: Iterable[tuple], grid: BinGrid) -> WalkerState:
    """Build a state from ``(polarization, bin, amplitude)`` triples.

    Repeated ``(polarization, bin)`` pairs accumulate. No normalization is applied.
    """
    amps = np.zeros((2, grid.bin_count), dtype=np.complex128)
    for pol, m, amp in entries:
        pol = Polarization.parse(pol)
        if int(m) != m or not 0 <= m < grid.bin_count:
            raise ValueError(f"bin index {m!r} outside 0..{grid.bin_count - 1}")
        amp = complex(amp)
        if not (np.isfinite(amp.real) and np.isfinite(amp.imag)):
            raise ValueError(f"non-finite amplitude {amp!r} at ({pol.name}, {m})")
        amps[pol, int(m)] += amp
    return WalkerState(amps, grid)


def norm_squared(state: WalkerState) -> float:
    return float(np.sum(np.abs(state.amplitudes) ** 2))


def probabilities(state: WalkerState) -> "Distribution":
    a = state.amplitudes
    return Distribution(a.real ** 2 + a.imag ** 2, state.grid)


@dataclass(frozen=True, eq=False)
class Distribution:
    """Probabilities ``p[pol, bin]`` of finding the photon in a polarization and time bin."""

    probabilities: np.ndarray
    grid: BinGrid

    def __post_init__(self):
        p = np.array(self.probabilities, dtype=np.float64, copy=True)
        if p.shape != (2, self.grid.bin_count):
            raise ValueError(
                f"probabilities must have shape (2, {self.grid.bin_count}), got {p.shape}")
        if not np.all(np.isfinite(p)):
            raise ValueError("probabilities must be finite")
        if np.any(p < 0):
            raise ValueError("probabilities must be non-negative")
        object.__setattr__(self, "probabilities", _frozen(p))

    @classmethod
    def from_mapping(cls, mapping: Mapping[tuple, float], grid: BinGrid) -> "Distribution":
        """Build from ``{(bin, polarization): probability}``."""
        p = np.zeros((2, grid.bin_count))
        for (m, pol), value in mapping.items():
            p[Polarization.parse(pol), m] += value
        return cls(p, grid)

    @classmethod
    def from_marginal(cls, marginal, grid: BinGrid | None = None,
                      pol=Polarization.H) -> "Distribution":
        """Place a per-bin distribution entirely in one polarization row."""
        marginal = np.asarray(marginal, dtype=np.float64)
        grid = grid or BinGrid(marginal.size)
        p = np.zeros((2, grid.bin_count))
        p[Polarization.parse(pol), :marginal.size] = marginal
        return cls(p, grid)

    def __getitem__(self, key) -> float:
        m, pol = key
        return float(self.probabilities[Polarization.parse(pol), m])

    def total(self) -> float:
        return float(self.probabilities.sum())

    def marginal(self) -> np.ndarray:
        """Per-bin probability summed over polarization."""
        return self.probabilities.sum(axis=0)

    def component(self, pol) -> np.ndarray:
        return self.probabilities[Polarization.parse(pol)].copy()

    def only(self, pol) -> "Distribution":
        """Copy with the other polarization row zeroed."""
        pol = Polarization.parse(pol)
        p = np.zeros_like(self.probabilities)
        p[pol] = self.probabilities[pol]
        return Distribution(p, self.grid)

    def renormalized(self) -> "Distribution":
        total = self.total()
        if total <= 0:
            raise ValueError("cannot renormalize an all-zero distribution")
        return Distribution(self.probabilities / total, self.grid)

    def padded(self, bin_count: int) -> "Distribution":
        if bin_count < self.grid.bin_count and np.any(self.probabilities[:, bin_count:] > 0):
            raise ValueError(f"distribution has mass beyond bin {bin_count - 1}")
        p = np.zeros((2, bin_count))
        keep = min(bin_count, self.grid.bin_count)
        p[:, :keep] = self.probabilities[:, :keep]
        return Distribution(p, self.grid.resized(bin_count))

    def __add__(self, other: "Distribution") -> "Distribution":
        n = max(self.grid.bin_count, other.grid.bin_count)
        return Distribution(self.padded(n).probabilities + other.padded(n).probabilities,
                            self.grid.resized(n))

    def rows(self, max_bin: int | None = None):
        """Yield ``(bin, delay_ps, polarization_name, probability)`` sorted by bin then H, V."""
        stop = self.grid.bin_count if max_bin is None else min(max_bin + 1, self.grid.bin_count)
        for m in range(stop):
            for pol in Polarization:
                yield m, self.grid.delay(m), pol.name, float(self.probabilities[pol, m])

    def to_csv(self, max_bin: int | None = None) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["bin", "delay_ps", "polarization", "probability"])
        for m, delay, pol, p in self.rows(max_bin):
            writer.writerow([m, fmt(delay), pol, fmt(p)])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str, bin_spacing: float | None = None) -> "Distribution":
        rows = list(csv.DictReader(io.StringIO(text)))
        if not rows:
            raise ValueError("empty distribution CSV")
        bins = [int(r["bin"]) for r in rows]
        if bin_spacing is None:
            spacing = [float(r["delay_ps"]) / int(r["bin"]) for r in rows if int(r["bin"]) > 0]
            bin_spacing = spacing[0] if spacing else DEFAULT_BIN_SPACING_PS
        grid = BinGrid(max(bins) + 1, bin_spacing)
        return cls.from_mapping(
            {(int(r["bin"]), r["polarization"]): float(r["probability"]) for r in rows}, grid)


def fmt(x: float) -> str:
    """Shortest round-tripping text for a float; used by every CSV writer."""
    x = float(x)
    if x == 0:
        return "0"
    return repr(x)
