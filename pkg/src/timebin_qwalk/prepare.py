"""Input-state preparation and ideal waveplate Jones matrices."""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .state import NORM_EPS, BinGrid, Polarization, WalkerState, make_state, norm_squared


class InputKind(str, Enum):
    SINGLE_BIN = "single_bin"
    TWO_BIN = "two_bin"
    EXPLICIT = "explicit"


@dataclass(frozen=True)
class InputSpec:
    """Recipe for an input state.

    ``single_bin``: ``(alpha|H> + beta|V>) (x) |t0>``.
    ``two_bin``: ``|pol> (x) (|t0> + exp(i nu)|t_k>) / sqrt(2)``.
    ``explicit``: ``entries`` as accepted by :func:`make_state`.
    """

    kind: InputKind = InputKind.SINGLE_BIN
    alpha: complex = 1.0
    beta: complex = 0.0
    k: int = 1
    nu: float = 0.0
    polarization: Polarization = Polarization.H
    entries: tuple = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "kind", InputKind(self.kind))
        object.__setattr__(self, "polarization", Polarization.parse(self.polarization))
        object.__setattr__(self, "entries", tuple(tuple(e) for e in self.entries))
        if self.kind is InputKind.SINGLE_BIN:
            norm = abs(self.alpha) ** 2 + abs(self.beta) ** 2
            if abs(norm - 1) > NORM_EPS:
                raise ValueError(f"|alpha|^2 + |beta|^2 = {norm:.12g}, expected 1")
        elif self.kind is InputKind.TWO_BIN:
            if int(self.k) != self.k or self.k < 1:
                raise ValueError(f"two-bin offset k must be an integer >= 1, got {self.k!r}")
            if not np.isfinite(self.nu):
                raise ValueError("nu must be finite")

    @classmethod
    def single_bin(cls, alpha: complex, beta: complex) -> "InputSpec":
        return cls(InputKind.SINGLE_BIN, alpha=alpha, beta=beta)

    @classmethod
    def two_bin(cls, k: int, nu: float, polarization=Polarization.H) -> "InputSpec":
        return cls(InputKind.TWO_BIN, k=k, nu=nu, polarization=polarization)

    @classmethod
    def explicit(cls, entries) -> "InputSpec":
        return cls(InputKind.EXPLICIT, entries=tuple(entries))

    @property
    def extent(self) -> int:
        """Number of leading bins the prepared state can occupy."""
        if self.kind is InputKind.TWO_BIN:
            return self.k + 1
        if self.kind is InputKind.EXPLICIT and self.entries:
            return max(int(e[1]) for e in self.entries) + 1
        return 1


def prepare(spec: InputSpec, grid: BinGrid) -> WalkerState:
    if spec.kind is InputKind.SINGLE_BIN:
        alpha, beta = complex(spec.alpha), complex(spec.beta)
        # fix the global phase so the leading amplitude is real and non-negative
        lead = alpha if alpha != 0 else beta
        phase = np.conj(lead) / abs(lead)
        state = make_state([(Polarization.H, 0, alpha * phase),
                            (Polarization.V, 0, beta * phase)], grid)
    elif spec.kind is InputKind.TWO_BIN:
        if spec.k >= grid.bin_count:
            raise ValueError(f"bin offset k={spec.k} outside grid of {grid.bin_count} bins")
        r = 1 / np.sqrt(2)
        state = make_state([(spec.polarization, 0, r),
                            (spec.polarization, spec.k, r * np.exp(1j * spec.nu))], grid)
    else:
        state = make_state(spec.entries, grid)
        norm = norm_squared(state)
        if abs(norm - 1) > NORM_EPS:
            raise ValueError(f"explicit input has squared norm {norm:.12g}, expected 1")
    return state


def _rotation(angle: float) -> np.ndarray:
    c, s = np.cos(angle), np.sin(angle)
    return np.array([[c, s], [-s, c]])


def retarder(retardance: float, axis_angle: float) -> np.ndarray:
    """Linear retarder with its fast axis at ``axis_angle`` from H."""
    core = np.diag([1.0, np.exp(-1j * retardance)])
    return _rotation(-axis_angle) @ core @ _rotation(axis_angle)


def waveplate(kind: str, axis_angle: float) -> np.ndarray:
    """Jones matrix of an ideal half- or quarter-wave plate; ``axis_angle`` in radians."""
    retardance = {"half": np.pi, "quarter": np.pi / 2}.get(kind)
    if retardance is None:
        raise ValueError(f"waveplate kind must be 'half' or 'quarter', got {kind!r}")
    return retarder(retardance, axis_angle)


def apply_jones(state: WalkerState, jones: np.ndarray) -> WalkerState:
    """Apply a polarization optic to every time bin."""
    return WalkerState(np.asarray(jones) @ state.amplitudes, state.grid)


def equal_up_to_phase(a, b, atol: float = 1e-12) -> bool:
    a = np.asarray(a, dtype=complex).ravel()
    b = np.asarray(b, dtype=complex).ravel()
    idx = np.argmax(np.abs(b))
    if abs(b[idx]) == 0:
        return bool(np.allclose(a, 0, atol=atol))
    ratio = a[idx] / b[idx]
    if abs(abs(ratio) - 1) > atol:
        return False
    return bool(np.allclose(a, ratio * b, atol=atol))
