"""Optional figures (requires matplotlib)."""

from __future__ import annotations

from collections import defaultdict


def _plt():
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    return plt


def plot_fig2b(rows, path) -> None:
    """Mean LQG cost per policy against the swept variance of sensor 1."""
    plt = _plt()
    series = defaultdict(list)
    for r in rows:
        series[r["policy"]].append((r["value"], r["mean_j"], r["se_j"]))
    fig, ax = plt.subplots(figsize=(5, 3.5))
    for name, pts in series.items():
        pts.sort()
        x, y, se = zip(*pts)
        ax.errorbar(x, y, yerr=[1.96 * s for s in se], marker="o", capsize=2, label=name)
    ax.set_xlabel("observation noise variance of sensor 1")
    ax.set_ylabel("LQG cost")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def plot_fig2c(rows, path) -> None:
    """Cost ratio to the largest window against the observation probability."""
    plt = _plt()
    series = defaultdict(list)
    for r in rows:
        series[r["policy"]].append((r["value"], r["ratio"], r["ratio_se"]))
    fig, ax = plt.subplots(figsize=(5, 3.5))
    for name, pts in sorted(series.items()):
        pts.sort()
        x, y, se = zip(*pts)
        ax.errorbar(x, y, yerr=[1.96 * s for s in se], marker="o", capsize=2, label=name)
    ax.set_xlabel("observation probability p")
    ax.set_ylabel("cost ratio")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
