"""Figures written next to the CSV reports."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

COLORS = {"mcts": "tab:blue", "rw": "tab:red", "tft": "tab:brown", "ntft": "tab:cyan"}
HATCHES = {"mcts": "", "rw": "..", "tft": "//", "ntft": "\\\\"}

RC = {
    "font.size": 9,
    "axes.labelsize": 9,
    "legend.fontsize": 8,
    "xtick.labelsize": 8,
    "ytick.labelsize": 8,
    "axes.spines.top": False,
    "axes.spines.right": False,
}


def plot_utilities(aggregates, path, title=None):
    """Grouped bars of mean utility per held profile, error bars = std."""
    series = {}
    for a in aggregates:
        series.setdefault((a.role, a.agent), {})[a.profile] = (a.mean, a.std)
    profiles = sorted({a.profile for a in aggregates})
    x = np.arange(len(profiles))
    width = 0.8 / max(len(series), 1)
    with plt.rc_context(RC):
        fig, ax = plt.subplots(figsize=(3.4, 2.6))
        for j, ((role, agent), vals) in enumerate(sorted(series.items())):
            means = [vals.get(p, (np.nan, 0))[0] for p in profiles]
            stds = [vals.get(p, (0, 0))[1] for p in profiles]
            ax.bar(x + (j - (len(series) - 1) / 2) * width, means, width, yerr=stds, capsize=3,
                   color=COLORS.get(agent, "0.6"), alpha=0.45, edgecolor=COLORS.get(agent, "0.3"),
                   hatch=HATCHES.get(agent, ""), label=f"{role}: {agent}")
        ax.set_xticks(x)
        ax.set_xticklabels([f"pr. {p}" for p in profiles])
        ax.set_ylim(0, 1.3)
        ax.set_ylabel("mean utility")
        ax.legend(frameon=False, ncol=2, loc="upper center")
        if title:
            ax.set_title(title)
        fig.tight_layout()
        fig.savefig(path, dpi=150)
        plt.close(fig)


def plot_kernel_table(scores, path, baseline=None):
    """Bar chart of average forecast distance per kernel."""
    names = [s.kernel for s in scores]
    vals = [s.avg_distance for s in scores]
    with plt.rc_context(RC):
        fig, ax = plt.subplots(figsize=(3.4, 2.4))
        ax.bar(names, vals, color="0.7", edgecolor="0.2")
        if baseline is not None:
            ax.axhline(baseline, color="tab:red", ls="--", lw=1, label="repeat last bid")
            ax.legend(frameon=False)
        ax.set_ylabel("avg. distance")
        fig.tight_layout()
        fig.savefig(path, dpi=150)
        plt.close(fig)
