"""Figure rendering for score reports and margin analyses.

Every report path can drop PNG figures next to its CSV/text output: grouped
metric bars per prompt style, per-tier trend lines, and the per-error-kind
margin bars.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

from .metrics import METRIC_COLUMNS, ScoreReport


def save_metrics_figure(report: ScoreReport, path: str | Path) -> Path:
    """Grouped bars: one cluster per metric, one bar per prompt style (pooled tiers)."""
    path = Path(path)
    styles = sorted({style for style, tier in report.aggregates if tier is None})
    fig, ax = plt.subplots(figsize=(9, 4.5))
    width = 0.8 / max(len(styles), 1)
    for si, style in enumerate(styles):
        metrics = report.aggregates.get((style, None), {})
        xs = [i + si * width for i in range(len(METRIC_COLUMNS))]
        ys = [metrics.get(col, 0.0) for col in METRIC_COLUMNS]
        ax.bar(xs, ys, width=width, label=style or "-")
    ax.set_xticks([i + 0.4 - width / 2 for i in range(len(METRIC_COLUMNS))])
    ax.set_xticklabels(METRIC_COLUMNS)
    ax.set_ylabel("percent")
    ax.set_ylim(0, 105)
    ax.set_title("Aggregate metrics by prompt style")
    if styles:
        ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def save_tier_figure(report: ScoreReport, path: str | Path, column: str = "RP.SR") -> Path:
    """One line per style: the chosen metric across difficulty tiers."""
    path = Path(path)
    styles = sorted({style for style, tier in report.aggregates if tier is None})
    tiers = sorted({tier for _, tier in report.aggregates if tier is not None})
    fig, ax = plt.subplots(figsize=(7, 4))
    for style in styles:
        ys = [report.aggregates.get((style, t), {}).get(column) for t in tiers]
        if any(y is not None for y in ys):
            ax.plot(tiers, [y if y is not None else float("nan") for y in ys], marker="o", label=style or "-")
    ax.set_xlabel("difficulty tier")
    ax.set_ylabel(f"{column} (percent)")
    ax.set_ylim(-2, 105)
    ax.set_title(f"{column} across tiers")
    if styles:
        ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def save_margin_figure(margins: dict[str, float], path: str | Path) -> Path:
    """Mean preference margin per error kind, as a bar chart."""
    path = Path(path)
    kinds = sorted(margins)
    fig, ax = plt.subplots(figsize=(7, 4))
    ax.bar(kinds, [margins[k] for k in kinds])
    ax.axhline(0.0, color="black", linewidth=0.8)
    ax.set_ylabel("mean margin (chosen - rejected)")
    ax.set_title("Preference margin by error kind")
    plt.setp(ax.get_xticklabels(), rotation=20, ha="right")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path
