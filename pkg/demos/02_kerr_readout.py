"""Reading time bins out with an optical Kerr gate.

A strong pump rotates the signal polarization inside 10 cm of fiber, so a
crossed polarizer only passes signal that overlaps the pump.  Scanning the
pump delay traces out the time-bin distribution, and sampling that trace at
each bin delay gives the distribution back.

    python demos/02_kerr_readout.py [output_dir]
"""

import sys
from pathlib import Path

import numpy as np

from timebin_qwalk import (
    GateConfig,
    InputSpec,
    StepSchedule,
    calibrate_pump,
    distance,
    evolve,
    gate_efficiency,
    nonlinear_phase,
    prepare,
)
from timebin_qwalk.kerr import read_out
from timebin_qwalk.state import BinGrid, probabilities

OUT = Path(sys.argv[1]) if len(sys.argv) > 1 else Path("demo_output")

# Gate: polarizer at 45 degrees to the pump, 10 ps/m walk-off between pump and signal
gate = GateConfig(theta=np.pi / 4, walkoff=10.0)

# Choose the pump peak so the largest nonlinear phase is exactly pi (unit gating efficiency)
pump = calibrate_pump(gate, "gaussian", fwhm=0.5)
print(f"calibrated pump peak intensity: {pump.peak_intensity:.4e} (arb. units)")

T = np.linspace(-1.5, 1.5, 13)
for t, phi, eta in zip(T, nonlinear_phase(T, gate, pump), gate_efficiency(T, gate, pump)):
    print(f"  delay {t:+.2f} ps   phase {phi:.4f} rad   efficiency {eta:.4f}")

# Walk 18 steps and push the output through the gate
spec = InputSpec.single_bin(1, 0)
grid = BinGrid.for_walk(18, spec.extent)
direct = probabilities(evolve(prepare(spec, grid), StepSchedule.uniform(18))[-1]).renormalized()
readout, trace_h, trace_v = read_out(direct, gate, pump, signal_fwhm=0.3)

print(f"\nscan: {len(trace_h.delays)} delays from {trace_h.delays[0]:.2f} to {trace_h.delays[-1]:.2f} ps")
print(f"total-variation distance, readout vs direct: {distance(readout, direct):.2e}")

try:
    from timebin_qwalk import plotting

    svg = plotting.trace_figure(trace_h, trace_v)
except ImportError:
    print("matplotlib not installed; skipping figure")
else:
    OUT.mkdir(parents=True, exist_ok=True)
    (OUT / "kerr_trace.svg").write_bytes(svg)
    print(f"figure written to {OUT}/kerr_trace.svg")
