"""Where the photons go: the setup's loss budget, and how it compares.

Every element's insertion loss is quoted in dB, so the total is a plain sum.
The walk itself costs only -0.044 dB per step.  Most of the loss sits in the
readout (filters, detector, Kerr gate).

    python demos/05_loss_budget.py [output_dir]
"""

import sys
from pathlib import Path

from timebin_qwalk import loss_budget
from timebin_qwalk.analysis import ALT_AR_CRYSTAL_LOSS_DB, default_loss_components, load_landscape

OUT = Path(sys.argv[1]) if len(sys.argv) > 1 else Path("demo_output")

components = default_loss_components(n_crystals=18)
for c in components:
    print(f"{c.name:42s} {c.loss_db:7.3f} dB x {c.count:2d} = {c.total_db:7.3f} dB")
total, efficiency = loss_budget(components)
print(f"{'total':42s} {total:7.3f} dB  ->  {100 * efficiency:.1f}% transmitted")

walk_only, walk_eff = loss_budget(components[-1:])
print(f"\nthe 18 walk crystals alone: {walk_only:.3f} dB ({100 * walk_eff:.1f}%)")
print(f"with the other anti-reflection coating ({ALT_AR_CRYSTAL_LOSS_DB} dB each): "
      f"{18 * ALT_AR_CRYSTAL_LOSS_DB:.3f} dB")

print("\nother discrete-time photonic walks, by loss per step:")
rows = sorted((r for r in load_landscape() if r.loss_db_per_step is not None),
              key=lambda r: r.loss_db_per_step, reverse=True)
for r in rows[:8]:
    print(f"  {r.year} {r.reference:24s} {r.steps:4d} steps  {r.loss_db_per_step:7.3f} dB/step  {r.platform}")

try:
    from timebin_qwalk import plotting

    svg = plotting.landscape_figure(load_landscape())
except ImportError:
    print("matplotlib not installed; skipping figure")
else:
    OUT.mkdir(parents=True, exist_ok=True)
    (OUT / "landscape.svg").write_bytes(svg)
    print(f"figure written to {OUT}/landscape.svg")
