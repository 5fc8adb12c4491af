"""SVG figures for the command-line outputs.  Requires matplotlib."""

from __future__ import annotations

import io

import numpy as np


def _pyplot():
    import matplotlib

    matplotlib.use("Agg")
    matplotlib.rcParams["svg.hashsalt"] = "timebin-qwalk"
    import matplotlib.pyplot as plt

    return plt


def _svg(fig) -> bytes:
    buf = io.BytesIO()
    fig.savefig(buf, format="svg", metadata={"Date": None})
    _pyplot().close(fig)
    return buf.getvalue()


def evolution_figure(dists, title: str = "") -> bytes:
    """Step-by-step bar charts, H on top and V below; ``dists`` is one per step."""
    plt = _pyplot()
    fig, axes = plt.subplots(2, 1, figsize=(7, 6), sharex=True)
    cmap = plt.get_cmap("rainbow")
    n = len(dists)
    for pol, ax in enumerate(axes):
        for step, d in enumerate(dists):
            p = d.probabilities[pol]
            ax.plot(np.arange(p.size), p, drawstyle="steps-mid",
                    color=cmap(step / max(n - 1, 1)), lw=1)
        ax.set_ylabel(f"{'HV'[pol]} probability")
    axes[-1].set_xlabel("time bin")
    if title:
        axes[0].set_title(title)
    fig.tight_layout()
    return _svg(fig)


def series_figure(x, ys: dict, xlabel: str, ylabel: str, title: str = "") -> bytes:
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(6, 4))
    for label, y in ys.items():
        ax.plot(x, y, marker="o", ms=3, label=label)
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    if title:
        ax.set_title(title)
    ax.legend()
    fig.tight_layout()
    return _svg(fig)


def trace_figure(trace_h, trace_v) -> bytes:
    plt = _pyplot()
    fig, axes = plt.subplots(2, 1, figsize=(7, 5), sharex=True)
    for ax, tr, name in zip(axes, (trace_h, trace_v), "HV"):
        ax.plot(tr.delays, tr.intensities, color="tab:red", lw=1)
        ax.set_ylabel(f"{name} gated intensity")
    axes[-1].set_xlabel("pump delay (ps)")
    fig.tight_layout()
    return _svg(fig)


def landscape_figure(entries) -> bytes:
    """Loss per step against step count, colored by reported fidelity."""
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(6, 4.5))
    shown = [e for e in entries if e.loss_db_per_step is not None]
    for e in shown:
        marker = "o" if e.photons == 1 else "^"
        if e.fidelity is None:
            ax.scatter(e.steps, e.loss_db_per_step, marker=marker, facecolor="white",
                       edgecolor="black", zorder=2)
    rated = [e for e in shown if e.fidelity is not None]
    for marker, photons in (("o", 1), ("^", 2)):
        group = [e for e in rated if (e.photons == 1) == (photons == 1)]
        if group:
            sc = ax.scatter([e.steps for e in group], [e.loss_db_per_step for e in group],
                            c=[e.fidelity for e in group], cmap="viridis", vmin=0.75, vmax=1.0,
                            marker=marker, edgecolor="black", zorder=3)
    fig.colorbar(sc, ax=ax, label="fidelity")
    ax.set_xscale("log")
    ax.set_xlabel("number of steps")
    ax.set_ylabel("loss per step (dB)")
    fig.tight_layout()
    return _svg(fig)
