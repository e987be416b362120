"""Static matplotlib figures rendered next to the delimited outputs."""

from __future__ import annotations

import math
from typing import Mapping, Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .evaluation import TableReport


def _gapped(values: Sequence[float | None]) -> list[float]:
    """None (undefined) becomes NaN so lines break instead of interpolating."""
    return [math.nan if v is None else v for v in values]


def save_timeseries_plot(
    path: str,
    times_s: Sequence[float],
    series: Mapping[str, Sequence[float | None]],
    thresholds: Mapping[str, float] | None = None,
) -> None:
    """Stacked per-metric panels over a shared time axis."""
    thresholds = thresholds or {}
    n = max(1, len(series))
    fig, axes = plt.subplots(n, 1, sharex=True, figsize=(9.0, 1.9 * n + 1.0), squeeze=False)
    for ax, (label, values) in zip(axes[:, 0], series.items()):
        ax.plot(times_s, _gapped(values), lw=1.2, color="tab:blue")
        limit = thresholds.get(label)
        if limit is not None:
            ax.axhline(limit, color="tab:red", lw=0.8, ls="--")
        ax.set_ylabel(label)
        ax.grid(True, alpha=0.3)
    axes[-1, 0].set_xlabel("time [s]")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def save_report_plot(path: str, report: TableReport) -> None:
    """Grouped bars of the headline statistics per metric column."""
    picks = ("acc", "f1s", "mcc")
    metric_ids = report.metric_ids
    x = range(len(metric_ids))
    width = 0.8 / len(picks)
    fig, ax = plt.subplots(figsize=(max(6.0, 1.0 * len(metric_ids)), 4.0))
    for k, field in enumerate(picks):
        heights = [getattr(report.stats[m], field) or 0.0 for m in metric_ids]
        ax.bar([i + k * width for i in x], heights, width=width, label=field.upper())
    ax.set_xticks([i + width for i in x])
    ax.set_xticklabels(metric_ids, rotation=30, ha="right")
    ax.set_ylim(0.0, 1.0)
    ax.legend()
    ax.grid(True, axis="y", alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def save_sweep_plot(
    path: str,
    grid: Sequence[str],
    stat_series: Mapping[str, Sequence[float | None]],
) -> None:
    """Statistic trajectories across the sweep grid."""
    fig, ax = plt.subplots(figsize=(7.0, 4.0))
    x = range(len(grid))
    for label, values in stat_series.items():
        ax.plot(x, _gapped(values), marker="o", label=label.upper())
    ax.set_xticks(list(x))
    ax.set_xticklabels(grid, rotation=30, ha="right")
    ax.set_xlabel("grid point")
    ax.set_ylim(-0.02, 1.02)
    ax.legend()
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
