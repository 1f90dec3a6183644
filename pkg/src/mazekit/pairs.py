"""Segment-level preference-pair construction.

A pair isolates the first index where a model trajectory leaves the ground
truth, shares the verified-correct prefix as context, and contrasts the
next L ground-truth moves against the model's. Contexts therefore never
contain wrong moves, and fully correct outputs produce no pair at all.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass

from .grid import DIRECTION_ORDER, Coord, Direction, Maze, Trajectory, execute, trajectory_from_words
from .prompts import (
    ASCII_GLYPHS,
    GlyphTable,
    render_next_step_answer,
    render_prompt,
    render_star_session,
    render_step_blocks,
)
from .solve import _distances

ERROR_KINDS = (
    "obstacle_collision",
    "boundary_exit",
    "nonoptimal_branch",
    "premature_stop",
    "wrong_turn_at_tp",
)


class InfeasibleErrorKind(Exception):
    """The maze geometry offers no perturbation of the requested kind."""


@dataclass(frozen=True)
class PreferencePair:
    maze_ref: str
    prompt_context: str
    chosen: str
    rejected: str
    divergence_index: int
    segment_len: int
    chosen_moves: Trajectory
    rejected_moves: Trajectory
    error_kind: str | None = None


def divergence_index(output: Trajectory, truth: Trajectory) -> int | None:
    """First index where the sequences differ; None when identical.

    When one sequence is a strict prefix of the other the divergence sits at
    the shorter length: a short output errs by omission there, a long one by
    continuation.
    """
    for i, (o, t) in enumerate(zip(output, truth)):
        if o != t:
            return i
    if len(output) == len(truth):
        return None
    return min(len(output), len(truth))


def extract_segments(
    output: Trajectory, truth: Trajectory, e: int, length: int
) -> tuple[Trajectory, Trajectory]:
    """(rejected, chosen) slices of length `length` starting at e, clipped at ends."""
    if length < 1:
        raise ValueError(f"segment length must be >= 1, got {length}")
    return output[e : e + length], truth[e : e + length]


def build_pair(
    maze: Maze,
    instance,
    output: Trajectory,
    length: int = 3,
    glyphs: GlyphTable = ASCII_GLYPHS,
    error_kind: str | None = None,
) -> PreferencePair | None:
    """Preference pair for a route-planning instance, or None.

    None means no trainable divergence: the output is fully correct, or it
    only over-continues past a complete correct path (the chosen segment
    would be empty). Rejected blocks render the model's erroneous positions
    faithfully, invalid moves flagged inline.
    """
    if instance.family != "route_planning":
        raise ValueError("pairs are built from route_planning instances")
    truth = trajectory_from_words(instance.answer_key)
    e = divergence_index(output, truth)
    if e is None or e >= len(truth):
        return None
    rejected_moves, chosen_moves = extract_segments(output, truth, e, length)
    prefix = truth[:e]
    start_pos = execute(maze, prefix).positions[-1]
    context = render_prompt(instance, "star", glyphs=glyphs) + render_step_blocks(
        maze, prefix, glyphs=glyphs
    )
    chosen_text = render_step_blocks(maze, chosen_moves, glyphs=glyphs, first_step=e + 1, start_pos=start_pos)
    rejected_text = render_step_blocks(
        maze, rejected_moves, glyphs=glyphs, first_step=e + 1, start_pos=start_pos, allow_invalid=True
    )
    if error_kind is None:
        trace = execute(maze, output)
        if trace.first_invalid == e:
            bad = trace.positions[-1].step(output[e])
            error_kind = "boundary_exit" if not maze.in_bounds(bad) else "obstacle_collision"
    return PreferencePair(
        maze_ref=f"maze-{maze.seed:x}",
        prompt_context=context,
        chosen=chosen_text,
        rejected=rejected_text,
        divergence_index=e,
        segment_len=length,
        chosen_moves=chosen_moves,
        rejected_moves=rejected_moves,
        error_kind=error_kind,
    )


def pair_to_record(pair: PreferencePair, instance_id: str | None = None) -> dict:
    record = {
        "prompt": pair.prompt_context,
        "chosen": pair.chosen,
        "rejected": pair.rejected,
        "maze_ref": pair.maze_ref,
        "divergence_index": pair.divergence_index,
        "segment_len": pair.segment_len,
        "chosen_moves": [d.value for d in pair.chosen_moves],
        "rejected_moves": [d.value for d in pair.rejected_moves],
        "error_kind": pair.error_kind,
    }
    if instance_id is not None:
        record["instance_id"] = instance_id
    return record


def synthesize_negative(maze: Maze, truth: Trajectory, kind: str, rng: random.Random) -> Trajectory:
    """Perturb a ground-truth trajectory to exhibit exactly one failure kind.

    The output always differs from the truth. Raises InfeasibleErrorKind
    when the geometry offers no such perturbation.
    """
    if kind not in ERROR_KINDS:
        raise ValueError(f"unknown error kind {kind!r}")
    positions = maze.path_cells(truth)
    if kind in ("obstacle_collision", "boundary_exit"):
        candidates: list[tuple[int, Direction]] = []
        for i in range(len(truth)):
            for d in DIRECTION_ORDER:
                target = positions[i].step(d)
                if kind == "boundary_exit" and not maze.in_bounds(target):
                    candidates.append((i, d))
                elif kind == "obstacle_collision" and maze.in_bounds(target) and target in maze.obstacles:
                    candidates.append((i, d))
        if not candidates:
            raise InfeasibleErrorKind(f"no {kind} flip exists along the path")
        i, d = candidates[rng.randrange(len(candidates))]
        return truth[:i] + (d,) + truth[i + 1 :]

    if kind == "premature_stop":
        if not truth:
            raise InfeasibleErrorKind("empty ground truth cannot be truncated")
        cut = rng.randrange(1, len(truth)) if len(truth) > 1 else 0
        return truth[:cut]

    if kind == "nonoptimal_branch":
        candidates = []
        for i in range(len(truth)):
            for d in DIRECTION_ORDER:
                if d == truth[i]:
                    continue
                if maze.passable(positions[i].step(d)):
                    candidates.append((i, d))
        if not candidates:
            raise InfeasibleErrorKind("no valid detour exists along the path")
        i, d = candidates[rng.randrange(len(candidates))]
        return truth[:i] + (d, d.opposite) + truth[i:]

    # wrong_turn_at_tp
    to_dest = _distances(maze, maze.destination)
    tp = set(maze.turn_points)
    candidates = []
    for i in range(len(truth)):
        if positions[i] not in tp:
            continue
        for d in DIRECTION_ORDER:
            if d == truth[i]:
                continue
            target = positions[i].step(d)
            if maze.passable(target) and to_dest.get(target, -1) != to_dest[positions[i]] - 1:
                candidates.append((i, d))
    if not candidates:
        raise InfeasibleErrorKind("no turn point admits a valid suboptimal flip")
    i, d = candidates[rng.randrange(len(candidates))]
    return truth[:i] + (d,) + truth[i + 1 :]


def build_pairs_from_responses(
    instances, responses: dict[str, Trajectory | None], length: int = 3, glyphs: GlyphTable = ASCII_GLYPHS
) -> list[dict]:
    """Pair records for parsed route responses keyed by instance id."""
    records = []
    for inst in instances:
        if inst.family != "route_planning" or inst.id not in responses:
            continue
        output = responses[inst.id]
        if output is None:
            continue  # unparseable responses carry no segment signal
        pair = build_pair(inst.maze, inst, output, length=length, glyphs=glyphs)
        if pair is not None:
            records.append(pair_to_record(pair, instance_id=inst.id))
    return records


def build_synthetic_pairs(
    instances,
    kinds: tuple[str, ...],
    per_maze: int,
    seed: int,
    length: int = 3,
    glyphs: GlyphTable = ASCII_GLYPHS,
) -> list[dict]:
    """Pairs from taxonomy-driven perturbations of the ground truth."""
    rng = random.Random(seed)
    records = []
    for inst in instances:
        if inst.family != "route_planning":
            continue
        truth = trajectory_from_words(inst.answer_key)
        for kind in kinds:
            for _ in range(per_maze):
                try:
                    output = synthesize_negative(inst.maze, truth, kind, rng)
                except InfeasibleErrorKind:
                    break
                pair = build_pair(inst.maze, inst, output, length=length, glyphs=glyphs, error_kind=kind)
                if pair is not None:
                    records.append(pair_to_record(pair, instance_id=inst.id))
    return records


def emit_sft_records(instances, glyphs: GlyphTable = ASCII_GLYPHS) -> list[dict]:
    """Ground-truth training targets: step-block sessions for trajectories,
    canonical short answers for the QA families."""
    records = []
    for inst in instances:
        prompt = render_prompt(inst, "star", glyphs=glyphs)
        if inst.family == "route_planning":
            response = render_star_session(inst.maze, trajectory_from_words(inst.answer_key), glyphs=glyphs)
        elif inst.family == "next_step":
            prefix = trajectory_from_words(inst.payload["prefix"])
            answer = Direction(inst.payload["options"][inst.answer_key])
            response = render_next_step_answer(inst.maze, prefix, answer, glyphs=glyphs)
        elif inst.family == "turnpoint":
            response = str(inst.answer_key)
        else:
            response = "true" if inst.answer_key else "false"
        records.append({"id": inst.id, "family": inst.family, "prompt": prompt, "response": response})
    return records


def write_jsonl(records: list[dict], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for record in records:
            fh.write(json.dumps(record, separators=(",", ":")) + "\n")
