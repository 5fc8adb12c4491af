"""Discrete-time photonic quantum walks on ultrafast time bins.

Polarization is the coin, picosecond time bins are the walker's positions,
and an optical Kerr gate reads the output out by scanning the pump delay.
"""

from .analysis import (
    DriftModel,
    LossComponent,
    calibrate_drift_sigma,
    classical_rw_distribution,
    distance,
    fidelity,
    growth_exponent,
    loss_budget,
    stability_run,
    variance,
)
from .kerr import (
    GateConfig,
    PumpPulse,
    TemporalTrace,
    calibrate_pump,
    discretize_trace,
    gate_efficiency,
    nonlinear_phase,
    synthesize_trace,
)
from .operators import (
    CoinParams,
    StepConfig,
    StepSchedule,
    apply_coin,
    apply_shift,
    apply_step,
    coin_matrix,
    dense_walk_oracle,
    evolve,
)
from .prepare import InputKind, InputSpec, prepare, waveplate
from .state import (
    BinGrid,
    Distribution,
    Polarization,
    ShiftOverflowError,
    WalkerState,
    make_state,
    norm_squared,
    probabilities,
)

__version__ = "0.1.0"
