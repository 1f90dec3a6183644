"""Built-in oracle-equivalence and round-trip checks.

Backs the `selftest` CLI subcommand (CI gate on a fresh checkout) and is
reused by the test suite. Each check raises AssertionError with a reason;
the runner turns that into pass/fail lines.
"""

from __future__ import annotations

import random
from dataclasses import replace

from .generate import DifficultyTier, GenConfig, annotate_turnpoints, generate
from .grid import Coord, Direction, Maze, maze_to_json, trajectory_from_words
from .metrics import score_route
from .pairs import ERROR_KINDS, InfeasibleErrorKind, divergence_index, extract_segments, synthesize_negative
from .parsing import check_consistency, parse_choice, parse_direction_list, parse_star_session
from .prompts import render_star_session
from .solve import UnsolvableMaze, count_turns, enumerate_paths, optimal_next, shortest_path


def random_open_maze(
    rng: random.Random,
    min_side: int = 3,
    max_side: int = 6,
    obstacle_density: float = 0.25,
) -> Maze | None:
    """Small random grid with scattered obstacles, or None when unsolvable.

    Unlike carved mazes these may have multiple shortest paths and open
    borders, which is exactly what oracle and boundary tests need.
    """
    width = rng.randint(min_side, max_side)
    height = rng.randint(min_side, max_side)
    cells = [Coord(r, c) for r in range(height) for c in range(width)]
    obstacles = {c for c in cells if rng.random() < obstacle_density}
    free = [c for c in cells if c not in obstacles]
    if len(free) < 2:
        return None
    start, dest = rng.sample(free, 2)
    maze = Maze(
        width=width,
        height=height,
        obstacles=frozenset(obstacles),
        start=start,
        destination=dest,
        seed=rng.getrandbits(32),
    )
    try:
        solution = shortest_path(maze)
    except UnsolvableMaze:
        return None
    maze = replace(maze, optimal_path=solution.path)
    return replace(maze, turn_points=tuple(annotate_turnpoints(maze)))


def random_trajectory(maze: Maze, rng: random.Random, max_len: int = 12) -> tuple[Direction, ...]:
    """A valid random walk from the start (may revisit cells)."""
    moves = []
    pos = maze.start
    for _ in range(rng.randint(0, max_len)):
        options = [(d, pos.step(d)) for d in Direction]
        options = [(d, t) for d, t in options if maze.passable(t)]
        if not options:
            break
        d, pos = options[rng.randrange(len(options))]
        moves.append(d)
    return tuple(moves)


def check_solver_oracle(samples: int = 30, seed: int = 101) -> None:
    rng = random.Random(seed)
    checked = 0
    while checked < samples:
        maze = random_open_maze(rng)
        if maze is None:
            continue
        solution = shortest_path(maze)
        all_paths = enumerate_paths(maze, max_len=min(20, solution.length + 4))
        best = min(len(p) for p in all_paths)
        assert solution.length == best, f"BFS {solution.length} != oracle {best} (seed {maze.seed})"
        shortest = [p for p in all_paths if len(p) == best]
        assert solution.is_unique == (len(shortest) == 1), "uniqueness flag disagrees with oracle"
        prefix_len = rng.randint(0, max(0, solution.length - 1))
        prefix = solution.path[:prefix_len]
        nexts = optimal_next(maze, prefix)
        oracle_nexts = {p[prefix_len] for p in shortest if p[:prefix_len] == prefix}
        assert nexts == oracle_nexts, f"optimal_next {nexts} != oracle {oracle_nexts}"
        checked += 1


def check_generator_calibration(per_tier: int = 5, tiers: tuple[int, ...] = (1, 2, 3), seed: int = 7) -> None:
    for k in tiers:
        for i in range(per_tier):
            cfg = GenConfig(tier=DifficultyTier(k), seed=seed + 1000 * k + i)
            maze = generate(cfg)
            turns = count_turns(maze.optimal_path)
            lo, hi = 2 * k - 1, 2 * k + 1
            assert lo <= turns <= hi, f"tier {k} produced {turns} turns"
            assert maze_to_json(maze) == maze_to_json(generate(cfg)), "same config, different maze"


def check_star_round_trip(samples: int = 40, seed: int = 303) -> None:
    rng = random.Random(seed)
    done = 0
    while done < samples:
        maze = random_open_maze(rng)
        if maze is None:
            continue
        traj = random_trajectory(maze, rng)
        text = render_star_session(maze, traj)
        session, _ = parse_star_session(text)
        assert session.moves == traj, "step moves changed in round trip"
        assert session.summary == traj, "summary changed in round trip"
        report = check_consistency(maze, session)
        assert not report.violations, f"ground-truth session flagged: {report.violations[:3]}"
        done += 1


def check_sdpo_structure(samples: int = 200, seed: int = 404) -> None:
    rng = random.Random(seed)
    words = [d.value for d in Direction]
    for _ in range(samples):
        truth = trajectory_from_words(rng.choices(words, k=rng.randint(1, 12)))
        output = list(truth)
        if rng.random() < 0.3:
            output = output[: rng.randint(0, len(output))]
        for i in range(len(output)):
            if rng.random() < 0.25:
                output[i] = Direction(rng.choice(words))
        output = tuple(output) + trajectory_from_words(rng.choices(words, k=rng.randint(0, 3)))
        e = divergence_index(output, truth)
        if e is None:
            assert output == truth, "no divergence reported for differing sequences"
            continue
        assert output[:e] == truth[:e], "prefixes differ before the divergence index"
        if e < len(output) and e < len(truth):
            assert output[e] != truth[e], "no difference at the divergence index"
        length = rng.randint(1, 4)
        rejected, chosen = extract_segments(output, truth, e, length)
        assert chosen == truth[e : e + length], "chosen segment not verbatim from the truth"
        assert rejected == output[e : e + length], "rejected segment not verbatim from the output"


def check_negative_synthesis(seed: int = 505) -> None:
    rng = random.Random(seed)
    made = {kind: 0 for kind in ERROR_KINDS}
    attempts = 0
    while min(made.values()) < 3 and attempts < 400:
        attempts += 1
        maze = random_open_maze(rng)
        if maze is None or not maze.optimal_path:
            continue
        for kind in ERROR_KINDS:
            try:
                output = synthesize_negative(maze, maze.optimal_path, kind, rng)
            except InfeasibleErrorKind:
                continue
            assert output != maze.optimal_path, f"{kind}: output equals truth"
            score = score_route(maze, output)
            if kind == "premature_stop":
                assert output == maze.optimal_path[: len(output)] and not score.sr
            elif kind == "nonoptimal_branch":
                assert score.cr == 1.0 and not score.sr
            else:
                assert not score.sr, f"{kind}: synthetic negative scored as success"
            made[kind] += 1
    missing = [k for k, n in made.items() if n == 0]
    assert not missing, f"never synthesized: {missing}"


def check_metric_hand_cases() -> None:
    maze = Maze(width=3, height=3, obstacles=frozenset(), start=Coord(0, 0), destination=Coord(2, 2))
    path = shortest_path(maze).path
    maze = replace(maze, optimal_path=path)
    perfect = score_route(maze, path)
    assert perfect.cr == 1.0 and perfect.sr
    nothing = score_route(maze, None)
    assert nothing.cr == 0.0 and not nothing.sr
    detour = (Direction.DOWN, Direction.UP) + path
    late = score_route(maze, detour)
    assert late.cr == 1.0 and not late.sr


def check_parsers() -> None:
    assert parse_direction_list('ok ["down", "Right"]') == trajectory_from_words(["down", "right"])
    assert parse_choice("Therefore, the answer is B.") == "B"
    assert parse_choice("a") == "A"


CHECKS = (
    ("solver_oracle_equivalence", check_solver_oracle),
    ("generator_calibration", check_generator_calibration),
    ("star_round_trip", check_star_round_trip),
    ("sdpo_structure", check_sdpo_structure),
    ("negative_synthesis", check_negative_synthesis),
    ("metric_hand_cases", check_metric_hand_cases),
    ("parser_hand_cases", check_parsers),
)


def run_selftest() -> list[tuple[str, bool, str]]:
    """Run every check; returns (name, passed, message) triples."""
    results = []
    for name, fn in CHECKS:
        try:
            fn()
            results.append((name, True, ""))
        except AssertionError as exc:
            results.append((name, False, str(exc)))
    return results
