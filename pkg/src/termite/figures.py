"""Figure rendering for reports.  All figures go straight to files; the Agg
backend is forced so this works headless."""

from __future__ import annotations

from pathlib import Path
from typing import Mapping, Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .evaluate import ExpansionOutcome

_STYLE = {
    "figure.figsize": (7.0, 4.0),
    "figure.dpi": 120,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "axes.spines.top": False,
    "axes.spines.right": False,
}


def _save(fig, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, bbox_inches="tight")
    plt.close(fig)
    return path


def save_loss_curve(trace: Sequence[float], path: str | Path) -> Path:
    """Per-epoch mean training loss."""
    with plt.rc_context(_STYLE):
        fig, ax = plt.subplots()
        ax.plot(range(1, len(trace) + 1), trace, marker="o", markersize=3)
        ax.set_xlabel("epoch")
        ax.set_ylabel("mean contrastive loss")
        ax.set_title("Training loss")
        return _save(fig, path)


def save_hubness_histogram(
    counts: Mapping[str, int], cutoff: float, path: str | Path
) -> Path:
    """Distribution of per-entity hubness counts with the cutoff marked."""
    values = sorted(counts.values())
    with plt.rc_context(_STYLE):
        fig, ax = plt.subplots()
        bins = min(50, max(10, len(set(values))))
        ax.hist(values, bins=bins, color="#4878a8", edgecolor="white")
        ax.axvline(cutoff, color="#c44e52", linestyle="--", label=f"cutoff = {cutoff:g}")
        ax.set_xlabel("times in a neighbor list")
        ax.set_ylabel("entities")
        ax.set_title("Hubness counts")
        ax.legend()
        return _save(fig, path)


def save_expansion_chart(
    outcomes: Sequence[ExpansionOutcome],
    path: str | Path,
    multipliers: Sequence[int] = (1, 2, 4),
) -> Path:
    """Grouped bars: fraction of each concept recovered per ranking size."""
    with plt.rc_context(_STYLE):
        fig, ax = plt.subplots()
        width = 0.8 / len(multipliers)
        for j, mult in enumerate(multipliers):
            xs = [i + j * width for i in range(len(outcomes))]
            ax.bar(
                xs,
                [o.percent(mult) for o in outcomes],
                width=width,
                label=f"{mult}x top",
            )
        ax.set_xticks([i + 0.4 - width / 2 for i in range(len(outcomes))])
        ax.set_xticklabels([o.concept for o in outcomes], rotation=45, ha="right")
        ax.set_ylim(0, 1.05)
        ax.set_ylabel("instances recovered")
        ax.set_title("Concept expansion")
        ax.legend()
        return _save(fig, path)
