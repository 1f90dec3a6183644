"""Task-instance builders and dataset assembly.

Four families: route_planning (full direction list), next_step (A-D choice),
turnpoint (yes/no or count questions), rule (true/false propositions).
Dataset assembly generates mazes round-robin across tiers, shares each maze
among families, assigns stratified train/val/test splits, and writes JSONL
deterministically: the same seed reproduces byte-identical files.
"""

from __future__ import annotations

import hashlib
import json
import math
import random
from dataclasses import dataclass, field
from pathlib import Path

from .generate import DifficultyTier, GenConfig, GenerationBudgetExhausted, generate
from .grid import DIRECTION_ORDER, Coord, Maze, maze_from_record, maze_to_record, trajectory_to_words
from .prompts import LETTER_FOR_DIRECTION, OPTION_LETTERS
from .solve import optimal_next, _distances

FAMILY_CODES = {"route_planning": "rp", "next_step": "ns", "turnpoint": "tc", "rule": "ru"}
DEFAULT_COUNTS = {"turnpoint": 11_000, "rule": 5_000, "structured": 7_000}
_TC_PER_MAZE = 3
_RU_PER_MAZE = 2


class QuotaInfeasible(Exception):
    """Generation budget exhausted before the requested instance counts."""


@dataclass
class TaskInstance:
    id: str
    family: str
    tier: int
    maze: Maze
    payload: dict
    answer_key: object
    split: str | None = None


def instance_to_record(instance: TaskInstance) -> dict:
    record = {
        "id": instance.id,
        "family": instance.family,
        "tier": instance.tier,
        "maze": maze_to_record(instance.maze),
        "payload": instance.payload,
        "answer_key": instance.answer_key,
    }
    if instance.split is not None:
        record["split"] = instance.split
    return record


def instance_from_record(record: dict) -> TaskInstance:
    return TaskInstance(
        id=record["id"],
        family=record["family"],
        tier=record["tier"],
        maze=maze_from_record(record["maze"]),
        payload=record["payload"],
        answer_key=record["answer_key"],
        split=record.get("split"),
    )


def load_instances(path: str | Path) -> list[TaskInstance]:
    out = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                out.append(instance_from_record(json.loads(line)))
    return out


def build_route_planning(maze: Maze, instance_id: str | None = None) -> TaskInstance:
    """Full-path instance; the key is the canonical shortest path."""
    return TaskInstance(
        id=instance_id or f"rp-{maze.seed:x}",
        family="route_planning",
        tier=maze.tier,
        maze=maze,
        payload={},
        answer_key=trajectory_to_words(maze.optimal_path),
    )


def build_next_step(maze: Maze, prefix_len: int, instance_id: str | None = None) -> TaskInstance | None:
    """Choice instance for the move after a ground-truth prefix.

    Returns None (skip) when more than one direction stays on a shortest
    path: the answer must be unique for the key to be sound.
    """
    path = maze.optimal_path
    if not 0 < prefix_len < len(path):
        raise ValueError(f"prefix_len must be in (0, {len(path)}), got {prefix_len}")
    prefix = path[:prefix_len]
    nexts = optimal_next(maze, prefix)
    if len(nexts) != 1:
        return None
    answer = next(iter(nexts))
    assert answer == path[prefix_len]
    return TaskInstance(
        id=instance_id or f"ns-{maze.seed:x}",
        family="next_step",
        tier=maze.tier,
        maze=maze,
        payload={
            "prefix": trajectory_to_words(prefix),
            "options": {letter: d.value for letter, d in OPTION_LETTERS.items()},
        },
        answer_key=LETTER_FOR_DIRECTION[answer],
    )


def _turn_cells(maze: Maze) -> list[Coord]:
    """Direction-change cells of the optimal path, in path order."""
    cells = maze.path_cells()
    moves = maze.optimal_path
    return [cells[i] for i in range(1, len(moves)) if moves[i] != moves[i - 1]]


def build_turnpoint_qa(
    maze: Maze,
    rng: random.Random,
    want_positive: bool | None = None,
    instance_id: str | None = None,
) -> TaskInstance:
    """Turn-point question: locate (yes/no about a cell) or count template.

    want_positive pins the yes/no polarity of a locate question so the
    dataset assembler can balance keys exactly; None draws a coin.
    """
    if rng.random() < 0.5:
        positive = rng.random() < 0.5 if want_positive is None else want_positive
        turn_points = list(maze.turn_points)
        if positive and turn_points:
            cell = turn_points[rng.randrange(len(turn_points))]
        else:
            positive = False
            tp = set(maze.turn_points)
            candidates = sorted(
                Coord(r, c)
                for r in range(maze.height)
                for c in range(maze.width)
                if maze.passable(Coord(r, c)) and Coord(r, c) not in tp
            )
            cell = candidates[rng.randrange(len(candidates))]
        question = f'Is cell ({cell.row}, {cell.col}) a turn point? Answer "yes" or "no".'
        return TaskInstance(
            id=instance_id or f"tc-{maze.seed:x}",
            family="turnpoint",
            tier=maze.tier,
            maze=maze,
            payload={"template": "locate", "question": question, "cell": [cell.row, cell.col]},
            answer_key="yes" if positive else "no",
        )
    question = (
        "On the optimal path from start to destination, at how many cells does "
        "the path change direction? Answer with a single integer."
    )
    return TaskInstance(
        id=instance_id or f"tc-{maze.seed:x}",
        family="turnpoint",
        tier=maze.tier,
        maze=maze,
        payload={"template": "count", "question": question},
        answer_key=len(_turn_cells(maze)),
    )


_CONSTRAINT_STATEMENTS = {
    True: (
        "Movement is restricted to the four directions up, down, left, and right.",
        "Moving into an obstacle cell is not allowed.",
    ),
    False: (
        "Diagonal movement is allowed.",
        "Moving outside the grid boundary is allowed.",
    ),
}


def build_rule_qa(
    maze: Maze,
    rng: random.Random,
    want_positive: bool | None = None,
    instance_id: str | None = None,
) -> TaskInstance:
    """True/false proposition about the maze's rules or geometry."""
    positive = rng.random() < 0.5 if want_positive is None else want_positive
    template = ("move_valid", "constraint", "reachability")[rng.randrange(3)]
    if template == "move_valid":
        pairs = []
        for r in range(maze.height):
            for c in range(maze.width):
                cell = Coord(r, c)
                if not maze.passable(cell):
                    continue
                for d in DIRECTION_ORDER:
                    if maze.passable(cell.step(d)) is positive:
                        pairs.append((cell, d))
        if not pairs:
            template = "constraint"  # degenerate geometry; fall through
        else:
            cell, d = pairs[rng.randrange(len(pairs))]
            question = f"Moving {d.value} from cell ({cell.row}, {cell.col}) is a valid move."
            key = positive
            return _rule_instance(maze, template, question, key, instance_id)
    if template == "constraint":
        statements = _CONSTRAINT_STATEMENTS[positive]
        question = statements[rng.randrange(len(statements))]
        return _rule_instance(maze, template, question, positive, instance_id)
    # reachability
    reachable = set(_distances(maze, maze.start))
    if positive:
        candidates = sorted(c for c in reachable if c != maze.start)
    else:
        candidates = sorted(
            Coord(r, c)
            for r in range(maze.height)
            for c in range(maze.width)
            if Coord(r, c) not in reachable
        )
    if not candidates:
        statements = _CONSTRAINT_STATEMENTS[positive]
        question = statements[rng.randrange(len(statements))]
        return _rule_instance(maze, "constraint", question, positive, instance_id)
    cell = candidates[rng.randrange(len(candidates))]
    question = f"Cell ({cell.row}, {cell.col}) is reachable from the start."
    return _rule_instance(maze, "reachability", question, positive, instance_id)


def _rule_instance(maze: Maze, template: str, question: str, key: bool, instance_id: str | None) -> TaskInstance:
    return TaskInstance(
        id=instance_id or f"ru-{maze.seed:x}",
        family="rule",
        tier=maze.tier,
        maze=maze,
        payload={"template": template, "question": question},
        answer_key=key,
    )


@dataclass
class DatasetConfig:
    turnpoint_count: int = DEFAULT_COUNTS["turnpoint"]
    rule_count: int = DEFAULT_COUNTS["rule"]
    structured_count: int = DEFAULT_COUNTS["structured"]
    seed: int = 0
    tiers: tuple[int, ...] = (1, 2, 3, 4, 5, 6)
    out_dir: str | Path = "dataset"
    max_attempts: int = 200


@dataclass
class DatasetManifest:
    seed: int
    counts: dict[str, int]
    split_sizes: dict[str, int]
    strata: dict[str, dict[str, int]] = field(default_factory=dict)
    files: dict[str, str] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "seed": self.seed,
            "counts": self.counts,
            "split_sizes": self.split_sizes,
            "strata": self.strata,
            "files": self.files,
        }


def _derive_seed(*parts) -> int:
    """Stable cross-platform sub-seed from arbitrary labeled parts."""
    blob = "|".join(str(p) for p in parts).encode()
    return int.from_bytes(hashlib.sha256(blob).digest()[:8], "big")


def _per_tier_quota(total: int, tiers: tuple[int, ...]) -> dict[int, int]:
    base, extra = divmod(total, len(tiers))
    return {t: base + (1 if i < extra else 0) for i, t in enumerate(tiers)}


def _tier_mazes(tier: int, count: int, seed: int, max_attempts: int) -> list[Maze]:
    mazes = []
    index = 0
    failures = 0
    while len(mazes) < count:
        child = _derive_seed(seed, "maze", tier, index)
        index += 1
        try:
            mazes.append(generate(GenConfig(tier=DifficultyTier(tier), seed=child, max_attempts=max_attempts)))
        except GenerationBudgetExhausted:
            failures += 1
            if failures > 20:
                raise QuotaInfeasible(f"tier {tier}: too many generation failures") from None
    return mazes


def _split_sizes(n: int) -> tuple[int, int, int]:
    """Counts for (train, val, test) under the 8:1:1 ratio, each within 1 of exact."""
    val = round(n * 0.1)
    test = round(n * 0.1)
    return n - val - test, val, test


def build_dataset(cfg: DatasetConfig) -> DatasetManifest:
    """Assemble the full QA dataset and write train/val/test JSONL plus a manifest."""
    out_dir = Path(cfg.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    route_total = cfg.structured_count // 2
    ns_total = cfg.structured_count - route_total
    quotas = {
        "route_planning": _per_tier_quota(route_total, cfg.tiers),
        "next_step": _per_tier_quota(ns_total, cfg.tiers),
        "turnpoint": _per_tier_quota(cfg.turnpoint_count, cfg.tiers),
        "rule": _per_tier_quota(cfg.rule_count, cfg.tiers),
    }

    instances: list[TaskInstance] = []
    for tier in cfg.tiers:
        need = max(
            quotas["route_planning"][tier],
            quotas["next_step"][tier],
            math.ceil(quotas["turnpoint"][tier] / _TC_PER_MAZE),
            math.ceil(quotas["rule"][tier] / _RU_PER_MAZE),
        )
        mazes = _tier_mazes(tier, need, cfg.seed, cfg.max_attempts)
        instances.extend(_build_tier_instances(tier, mazes, quotas, cfg))

    _assign_splits(instances, cfg.seed)

    counts: dict[str, int] = {}
    split_sizes: dict[str, int] = {"train": 0, "val": 0, "test": 0}
    strata: dict[str, dict[str, int]] = {}
    for inst in instances:
        counts[inst.family] = counts.get(inst.family, 0) + 1
        split_sizes[inst.split] += 1  # type: ignore[index]
        stratum = strata.setdefault(f"{inst.family}/tier{inst.tier}", {"train": 0, "val": 0, "test": 0})
        stratum[inst.split] += 1  # type: ignore[index]

    files = {}
    for split in ("train", "val", "test"):
        path = out_dir / f"{split}.jsonl"
        with open(path, "w", encoding="utf-8") as fh:
            for inst in instances:
                if inst.split == split:
                    fh.write(json.dumps(instance_to_record(inst), separators=(",", ":")) + "\n")
        files[split] = str(path)

    manifest = DatasetManifest(
        seed=cfg.seed, counts=counts, split_sizes=split_sizes, strata=strata, files=files
    )
    manifest_path = out_dir / "manifest.json"
    with open(manifest_path, "w", encoding="utf-8") as fh:
        json.dump(manifest.to_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")
    manifest.files["manifest"] = str(manifest_path)
    return manifest


def _build_tier_instances(
    tier: int, mazes: list[Maze], quotas: dict[str, dict[int, int]], cfg: DatasetConfig
) -> list[TaskInstance]:
    out: list[TaskInstance] = []

    for j in range(quotas["route_planning"][tier]):
        out.append(build_route_planning(mazes[j], instance_id=f"rp-t{tier}-{j:05d}"))

    ns_rng = random.Random(_derive_seed(cfg.seed, "next_step", tier))
    for j in range(quotas["next_step"][tier]):
        maze = mazes[j]
        lengths = list(range(1, len(maze.optimal_path)))
        ns_rng.shuffle(lengths)
        built = None
        for k in lengths:  # ambiguous positions are skipped and resampled
            built = build_next_step(maze, k, instance_id=f"ns-t{tier}-{j:05d}")
            if built is not None:
                break
        if built is None:
            raise QuotaInfeasible(f"tier {tier}: maze {maze.seed:x} has no unambiguous next step")
        out.append(built)

    tc_rng = random.Random(_derive_seed(cfg.seed, "turnpoint", tier))
    locate_toggle = True
    for j in range(quotas["turnpoint"][tier]):
        inst = build_turnpoint_qa(
            mazes[j // _TC_PER_MAZE], tc_rng, want_positive=locate_toggle, instance_id=f"tc-t{tier}-{j:05d}"
        )
        if inst.payload["template"] == "locate":
            locate_toggle = inst.answer_key == "no"  # alternate realized polarity
        out.append(inst)

    ru_rng = random.Random(_derive_seed(cfg.seed, "rule", tier))
    rule_toggle = True
    for j in range(quotas["rule"][tier]):
        inst = build_rule_qa(
            mazes[j // _RU_PER_MAZE], ru_rng, want_positive=rule_toggle, instance_id=f"ru-t{tier}-{j:05d}"
        )
        rule_toggle = inst.answer_key is False
        out.append(inst)

    return out


def _assign_splits(instances: list[TaskInstance], seed: int) -> None:
    strata: dict[tuple[str, int], list[TaskInstance]] = {}
    for inst in instances:
        strata.setdefault((inst.family, inst.tier), []).append(inst)
    for (family, tier), members in sorted(strata.items()):
        rng = random.Random(_derive_seed(seed, "split", family, tier))
        order = list(range(len(members)))
        rng.shuffle(order)
        _, val, test = _split_sizes(len(members))
        for rank, idx in enumerate(order):
            if rank < val:
                members[idx].split = "val"
            elif rank < val + test:
                members[idx].split = "test"
            else:
                members[idx].split = "train"
