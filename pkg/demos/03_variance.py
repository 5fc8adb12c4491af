"""Ballistic spreading: the walk's variance against a classical random walk.

A classical walker that stays or moves one bin with equal odds spreads as
n/4.  The quantum walk spreads roughly as n**2, which shows up as a slope
near 2 on a log-log plot.

    python demos/03_variance.py [output_dir]
"""

import sys
from pathlib import Path

import numpy as np

from timebin_qwalk import InputSpec, StepSchedule, growth_exponent, prepare
from timebin_qwalk.analysis import variance_series
from timebin_qwalk.state import BinGrid

OUT = Path(sys.argv[1]) if len(sys.argv) > 1 else Path("demo_output")
N = 30
r2 = 1 / np.sqrt(2)

series = {}
for name, spec in [("(H+iV) t0", InputSpec.single_bin(r2, 1j * r2)),
                   ("H t0", InputSpec.single_bin(1, 0))]:
    rows = variance_series(prepare(spec, BinGrid.for_walk(N)), StepSchedule.hadamard(N))
    series[name] = rows
    q = growth_exponent([(n, v) for n, v, _ in rows], (5, 18))
    c = growth_exponent([(n, v) for n, _, v in rows], (5, 18))
    print(f"{name}: exponent quantum {q:.3f}, classical {c:.3f}")

rows = series["(H+iV) t0"]
print("\nsymmetric input\n step  quantum  classical")
for n, vq, vc in rows[::3]:
    print(f"{n:5d}  {vq:7.3f}  {vc:9.3f}")

try:
    from timebin_qwalk import plotting

    svg = plotting.series_figure([r[0] for r in rows],
                                 {"quantum walk": [r[1] for r in rows],
                                  "classical walk": [r[2] for r in rows]},
                                 "step", "variance (bins$^2$)")
except ImportError:
    print("matplotlib not installed; skipping figure")
else:
    OUT.mkdir(parents=True, exist_ok=True)
    (OUT / "variance.svg").write_bytes(svg)
    print(f"figure written to {OUT}/variance.svg")
