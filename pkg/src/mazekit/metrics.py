"""Scoring: per-instance route/choice scores and report aggregation.

Completion rate counts the longest executable prefix of a prediction against
the optimal length, capped at 1. Success additionally requires the full
trajectory to execute, terminate on the destination, and match the optimal
length exactly. Aggregates are plain unweighted means, reported as
percentages with two decimals.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field

from .grid import Maze, Trajectory, execute
from .solve import shortest_path

METRIC_COLUMNS = ("RP.CR", "RP.SR", "NS.Acc", "TC.Acc", "RU.Acc")
_FAMILY_ACC = {"next_step": "NS.Acc", "turnpoint": "TC.Acc", "rule": "RU.Acc"}


@dataclass(frozen=True)
class RouteScore:
    valid_steps: int
    optimal_steps: int
    cr: float
    sr: bool


def score_route(maze: Maze, predicted: Trajectory | None) -> RouteScore:
    """Score a route-planning prediction; None means unparseable (scores 0)."""
    optimal = len(maze.optimal_path) if maze.optimal_path else shortest_path(maze).length
    if predicted is None:
        return RouteScore(0, optimal, 0.0, False)
    trace = execute(maze, predicted)
    valid = trace.first_invalid if trace.first_invalid is not None else len(predicted)
    cr = min(valid / optimal, 1.0)
    sr = trace.first_invalid is None and trace.reached_destination and valid == optimal
    return RouteScore(valid, optimal, cr, sr)


def score_choice(instance, parsed) -> bool:
    """True iff the parsed answer equals the instance's key; None is wrong."""
    if parsed is None:
        return False
    key = instance.answer_key
    if instance.family == "next_step":
        return isinstance(parsed, str) and parsed.upper() == key
    if instance.family == "turnpoint":
        if instance.payload.get("template") == "count":
            return parsed == key
        return isinstance(parsed, str) and parsed.lower() == key
    if instance.family == "rule":
        return parsed is key or parsed == key
    raise ValueError(f"family {instance.family!r} is not choice-scored")


@dataclass
class InstanceScore:
    """One scored instance; cr/sr for routes, acc for choice families."""

    id: str
    family: str
    tier: int
    style: str = ""
    cr: float | None = None
    sr: bool | None = None
    acc: bool | None = None


@dataclass
class ScoreReport:
    rows: list[InstanceScore]
    # (style, tier) -> metric -> percentage; tier None pools all tiers
    aggregates: dict[tuple[str, int | None], dict[str, float]] = field(default_factory=dict)


def _mean(values: list[float]) -> float:
    return sum(values) / len(values)


def aggregate(rows: list[InstanceScore]) -> ScoreReport:
    """Unweighted means per (style, tier) group plus pooled per-style rows."""
    report = ScoreReport(rows=list(rows))
    groups: dict[tuple[str, int | None], list[InstanceScore]] = {}
    for row in rows:
        groups.setdefault((row.style, row.tier), []).append(row)
        groups.setdefault((row.style, None), []).append(row)
    for key, members in groups.items():
        metrics: dict[str, float] = {}
        crs = [r.cr for r in members if r.cr is not None]
        srs = [1.0 if r.sr else 0.0 for r in members if r.sr is not None]
        if crs:
            metrics["RP.CR"] = 100.0 * _mean(crs)
        if srs:
            metrics["RP.SR"] = 100.0 * _mean(srs)
        for family, column in _FAMILY_ACC.items():
            accs = [1.0 if r.acc else 0.0 for r in members if r.family == family and r.acc is not None]
            if accs:
                metrics[column] = 100.0 * _mean(accs)
        if metrics:
            report.aggregates[key] = metrics
    return report


def _fmt(value: float | None) -> str:
    return "" if value is None else f"{value:.2f}"


def _sorted_keys(report: ScoreReport) -> list[tuple[str, int | None]]:
    return sorted(report.aggregates, key=lambda k: (k[0], k[1] is not None, k[1] or 0))


def report_csv(report: ScoreReport) -> str:
    """Benchmark-table layout: one row per (style, tier) group, fixed columns."""
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(["style", "tier"] + list(METRIC_COLUMNS))
    for style, tier in _sorted_keys(report):
        metrics = report.aggregates[(style, tier)]
        writer.writerow(
            [style or "-", "all" if tier is None else tier]
            + [_fmt(metrics.get(col)) for col in METRIC_COLUMNS]
        )
    return out.getvalue()


def report_text(report: ScoreReport) -> str:
    """Aligned-text rendering of the same layout as report_csv."""
    rows = [["style", "tier"] + list(METRIC_COLUMNS)]
    for style, tier in _sorted_keys(report):
        metrics = report.aggregates[(style, tier)]
        rows.append(
            [style or "-", "all" if tier is None else str(tier)]
            + [_fmt(metrics.get(col)) for col in METRIC_COLUMNS]
        )
    widths = [max(len(r[i]) for r in rows) for i in range(len(rows[0]))]
    lines = ["  ".join(cell.ljust(w) for cell, w in zip(row, widths)).rstrip() for row in rows]
    return "\n".join(lines) + "\n"


_STYLE_HEADERS = (("cot", "+CoT"), ("vot", "+VoT"), ("star", "+Ours"))
_CROSS_ROWS = (("CR", "RP.CR"), ("SR", "RP.SR"), ("Acc", "NS.Acc"))


def cross_prompt_csv(report: ScoreReport) -> str:
    """Cross-prompt layout: metric rows CR/SR/Acc against the prompt styles."""
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(["metric"] + [header for _, header in _STYLE_HEADERS])
    for label, column in _CROSS_ROWS:
        row = [label]
        for style, _ in _STYLE_HEADERS:
            metrics = report.aggregates.get((style, None), {})
            row.append(_fmt(metrics.get(column)))
        writer.writerow(row)
    return out.getvalue()


def cross_prompt_text(report: ScoreReport) -> str:
    rows = [["metric"] + [header for _, header in _STYLE_HEADERS]]
    for label, column in _CROSS_ROWS:
        rows.append(
            [label]
            + [_fmt(report.aggregates.get((style, None), {}).get(column)) for style, _ in _STYLE_HEADERS]
        )
    widths = [max(len(r[i]) for r in rows) for i in range(len(rows[0]))]
    lines = ["  ".join(cell.ljust(w) for cell, w in zip(row, widths)).rstrip() for row in rows]
    return "\n".join(lines) + "\n"
