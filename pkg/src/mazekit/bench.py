"""Benchmark runner against chat-completion endpoints.

Dispatches rendered prompts with bounded concurrency and retry/backoff,
checkpoints every response as it lands (runs are resumable by (id, style)),
then scores and writes reports in the benchmark-table and cross-prompt
layouts, with figures alongside. The auth token is read from an environment
variable at request time and never persisted.
"""

from __future__ import annotations

import json
import os
import random
import threading
import time
from concurrent.futures import ThreadPoolExecutor, as_completed
from dataclasses import dataclass
from pathlib import Path

import requests

from . import figures
from .metrics import (
    InstanceScore,
    ScoreReport,
    aggregate,
    cross_prompt_csv,
    cross_prompt_text,
    report_csv,
    report_text,
    score_choice,
    score_route,
)
from .parsing import extract_answer, parse_choice, parse_direction_list, UnparseableResponse, InvalidListToken
from .prompts import ASCII_GLYPHS, GlyphTable, render_prompt
from .tasks import TaskInstance


class EndpointUnreachable(Exception):
    """Requests kept failing after the retry budget; checkpoint is resumable."""


@dataclass
class EndpointConfig:
    base_url: str
    model: str
    auth_env: str | None = None
    max_concurrency: int = 4
    timeout: float = 60.0
    retries: int = 3
    supports_logprobs: bool = False
    temperature: float = 0.0
    backoff: float = 0.5

    def __post_init__(self):
        if self.max_concurrency < 1:
            raise ValueError("max_concurrency must be >= 1")
        if self.timeout <= 0:
            raise ValueError("timeout must be positive")

    @classmethod
    def from_file(cls, path: str | Path) -> "EndpointConfig":
        with open(path, encoding="utf-8") as fh:
            return cls(**json.load(fh))

    def headers(self) -> dict[str, str]:
        headers = {"Content-Type": "application/json"}
        token = os.environ.get(self.auth_env) if self.auth_env else None
        if token:
            headers["Authorization"] = f"Bearer {token}"
        return headers


def _post_with_retries(endpoint: EndpointConfig, payload: dict) -> tuple[dict, int]:
    last_error: Exception | None = None
    for attempt in range(1, endpoint.retries + 1):
        try:
            response = requests.post(
                endpoint.base_url,
                json=payload,
                headers=endpoint.headers(),
                timeout=endpoint.timeout,
            )
            response.raise_for_status()
            return response.json(), attempt
        except (requests.RequestException, ValueError) as exc:
            last_error = exc
            if attempt < endpoint.retries:
                time.sleep(endpoint.backoff * (2 ** (attempt - 1)))
    raise EndpointUnreachable(str(last_error))


def chat(endpoint: EndpointConfig, prompt: str) -> tuple[str, int]:
    """One chat-completion round trip; returns (text, attempts used)."""
    payload = {
        "model": endpoint.model,
        "messages": [{"role": "user", "content": prompt}],
        "temperature": endpoint.temperature,
    }
    body, attempts = _post_with_retries(endpoint, payload)
    try:
        return body["choices"][0]["message"]["content"], attempts
    except (KeyError, IndexError, TypeError) as exc:
        raise EndpointUnreachable(f"malformed completion body: {exc}") from exc


def completion_logprob(endpoint: EndpointConfig, context: str, continuation: str) -> float:
    """Sequence log-probability of a fixed continuation via echoed completions."""
    payload = {
        "model": endpoint.model,
        "prompt": context + continuation,
        "echo": True,
        "logprobs": 0,
        "max_tokens": 0,
    }
    body, _ = _post_with_retries(endpoint, payload)
    try:
        lp = body["choices"][0]["logprobs"]
        return sum(
            logprob
            for offset, logprob in zip(lp["text_offset"], lp["token_logprobs"])
            if offset >= len(context) and logprob is not None
        )
    except (KeyError, IndexError, TypeError) as exc:
        raise EndpointUnreachable(f"malformed logprob body: {exc}") from exc


def _load_checkpoint(path: Path) -> dict[tuple[str, str], dict]:
    done: dict[tuple[str, str], dict] = {}
    if path.exists():
        with open(path, encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if line:
                    record = json.loads(line)
                    done[(record["id"], record.get("style", ""))] = record
    return done


def run_benchmark(
    instances: list[TaskInstance],
    styles: tuple[str, ...],
    endpoint: EndpointConfig,
    out_dir: str | Path,
    glyphs: GlyphTable = ASCII_GLYPHS,
    write_figures: bool = True,
) -> ScoreReport:
    """Drive the endpoint over every (instance, style), then score and report.

    Responses are checkpointed to out_dir/responses.jsonl as they complete;
    rerunning skips finished (id, style) pairs. Raises EndpointUnreachable
    when any job exhausted its retries (finished work stays on disk).
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    checkpoint = out_dir / "responses.jsonl"
    done = _load_checkpoint(checkpoint)
    jobs = [
        (inst, style)
        for inst in instances
        for style in styles
        if (inst.id, style) not in done
    ]
    failures: list[str] = []
    lock = threading.Lock()

    def run_job(job: tuple[TaskInstance, str]) -> None:
        inst, style = job
        prompt = render_prompt(inst, style, glyphs=glyphs)
        started = time.monotonic()
        text, attempts = chat(endpoint, prompt)
        record = {
            "id": inst.id,
            "style": style,
            "raw_text": text,
            "latency": round(time.monotonic() - started, 6),
            "attempts": attempts,
        }
        with lock:
            done[(inst.id, style)] = record
            with open(checkpoint, "a", encoding="utf-8") as fh:
                fh.write(json.dumps(record, separators=(",", ":")) + "\n")

    if jobs:
        with ThreadPoolExecutor(max_workers=endpoint.max_concurrency) as pool:
            futures = {pool.submit(run_job, job): job for job in jobs}
            for future in as_completed(futures):
                try:
                    future.result()
                except EndpointUnreachable as exc:
                    inst, style = futures[future]
                    failures.append(f"{inst.id}/{style}: {exc}")
    if failures:
        raise EndpointUnreachable(
            f"{len(failures)} request(s) failed after retries; rerun to resume. First: {failures[0]}"
        )

    rows = score_records(instances, list(done.values()))
    report = aggregate(rows)
    write_reports(report, out_dir, write_figures=write_figures)
    return report


def score_records(instances: list[TaskInstance], records: list[dict]) -> list[InstanceScore]:
    """Parse and score raw response records against their instances."""
    by_id = {inst.id: inst for inst in instances}
    rows = []
    for record in records:
        inst = by_id.get(record["id"])
        if inst is None:
            continue
        style = record.get("style", "")
        text = record.get("raw_text", "")
        if inst.family == "route_planning":
            try:
                predicted = parse_direction_list(text)
            except (UnparseableResponse, InvalidListToken):
                predicted = None
            route = score_route(inst.maze, predicted)
            rows.append(InstanceScore(inst.id, inst.family, inst.tier, style, cr=route.cr, sr=route.sr))
        else:
            correct = score_choice(inst, extract_answer(inst, text))
            rows.append(InstanceScore(inst.id, inst.family, inst.tier, style, acc=correct))
    return rows


def write_reports(report: ScoreReport, out_dir: str | Path, write_figures: bool = True) -> dict[str, str]:
    """Benchmark-table and cross-prompt reports as CSV + aligned text (+ PNGs)."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = {
        "table_csv": out_dir / "report_table.csv",
        "table_txt": out_dir / "report_table.txt",
        "cross_csv": out_dir / "report_cross_prompt.csv",
        "cross_txt": out_dir / "report_cross_prompt.txt",
    }
    paths["table_csv"].write_text(report_csv(report), encoding="utf-8")
    paths["table_txt"].write_text(report_text(report), encoding="utf-8")
    paths["cross_csv"].write_text(cross_prompt_csv(report), encoding="utf-8")
    paths["cross_txt"].write_text(cross_prompt_text(report), encoding="utf-8")
    if write_figures:
        paths["metrics_png"] = figures.save_metrics_figure(report, out_dir / "report_metrics.png")
        paths["tiers_png"] = figures.save_tier_figure(report, out_dir / "report_tiers.png")
    return {key: str(path) for key, path in paths.items()}


def confidence_margin(pair_record: dict, endpoint: EndpointConfig, rng: random.Random) -> float:
    """Preference margin for one pair.

    Log-probability mode scores the chosen minus rejected continuation under
    the shared context. The fallback is a forced choice: both segments are
    shown in randomized A/B order and the verdict maps to +/-1 (unparseable
    counts as preferring the rejected side, i.e. -1).
    """
    context = pair_record["prompt"]
    chosen, rejected = pair_record["chosen"], pair_record["rejected"]
    if endpoint.supports_logprobs:
        return completion_logprob(endpoint, context, chosen) - completion_logprob(endpoint, context, rejected)
    chosen_is_a = rng.random() < 0.5
    first, second = (chosen, rejected) if chosen_is_a else (rejected, chosen)
    prompt = (
        context
        + "\nTwo candidate continuations follow. Exactly one of them is correct.\n"
        + "Continuation A:\n"
        + first
        + "Continuation B:\n"
        + second
        + "Which continuation is correct? Answer with A or B.\n"
    )
    text, _ = chat(endpoint, prompt)
    try:
        letter = parse_choice(text)
    except UnparseableResponse:
        return -1.0
    return 1.0 if letter == ("A" if chosen_is_a else "B") else -1.0


def evaluate_margins(
    pair_records: list[dict],
    endpoint: EndpointConfig,
    out_dir: str | Path,
    seed: int = 0,
    write_figures: bool = True,
) -> dict[str, float]:
    """Mean margin per error kind, written as CSV, aligned text, and a figure."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    rng = random.Random(seed)
    per_pair = []
    sums: dict[str, list[float]] = {}
    for record in pair_records:
        margin = confidence_margin(record, endpoint, rng)
        kind = record.get("error_kind") or "unlabeled"
        sums.setdefault(kind, []).append(margin)
        per_pair.append(
            {
                "maze_ref": record.get("maze_ref"),
                "instance_id": record.get("instance_id"),
                "error_kind": kind,
                "margin": margin,
            }
        )
    means = {kind: sum(values) / len(values) for kind, values in sums.items()}
    with open(out_dir / "margins.jsonl", "w", encoding="utf-8") as fh:
        for row in per_pair:
            fh.write(json.dumps(row, separators=(",", ":")) + "\n")
    lines = ["error_kind,mean_margin,pairs"]
    text_rows = [["error_kind", "mean_margin", "pairs"]]
    for kind in sorted(means):
        lines.append(f"{kind},{means[kind]:.4f},{len(sums[kind])}")
        text_rows.append([kind, f"{means[kind]:.4f}", str(len(sums[kind]))])
    (out_dir / "margins.csv").write_text("\n".join(lines) + "\n", encoding="utf-8")
    widths = [max(len(r[i]) for r in text_rows) for i in range(3)]
    aligned = ["  ".join(c.ljust(w) for c, w in zip(r, widths)).rstrip() for r in text_rows]
    (out_dir / "margins.txt").write_text("\n".join(aligned) + "\n", encoding="utf-8")
    if write_figures and means:
        figures.save_margin_figure(means, out_dir / "margins.png")
    return means
