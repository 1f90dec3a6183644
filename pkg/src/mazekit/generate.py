"""Procedural maze generation calibrated by turn frequency.

Pipeline per maze: carve a perfect maze (randomized depth-first), choose a
start/destination pair whose tree path lands in the tier's turn range
(rejection sampling), then inject dead-end stubs and misleading destinations
and annotate turn points. Everything draws from one seeded RNG, so identical
configs reproduce byte-identical records.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, replace

from .grid import DIRECTION_ORDER, Coord, Direction, Maze, Trajectory, validate_maze
from .solve import count_turns, shortest_path


class GenerationBudgetExhausted(Exception):
    """No maze satisfying the turn range within max_attempts carves."""


@dataclass(frozen=True)
class DifficultyTier:
    """Tier k with base turn count m = 2k - 1 and accepted range [m, m + 2]."""

    k: int

    def __post_init__(self):
        if self.k < 1:
            raise ValueError(f"tier index must be >= 1, got {self.k}")

    @property
    def m(self) -> int:
        return 2 * self.k - 1

    @property
    def turn_range(self) -> tuple[int, int]:
        return (self.m, self.m + 2)


@dataclass(frozen=True)
class GenConfig:
    tier: DifficultyTier
    grid_side: int | None = None
    dead_end_count: int | None = None
    misleading_count: int | None = None
    seed: int = 0
    max_attempts: int = 200

    def resolved(self) -> "GenConfig":
        """Fill tier-scaled defaults: side m + 6, k dead ends, min(k-1, 3) decoys."""
        k, m = self.tier.k, self.tier.m
        side = self.grid_side if self.grid_side is not None else m + 6
        if side < m + 4:
            raise ValueError(f"grid_side {side} too small for tier {k} (need >= {m + 4})")
        if side % 2 == 0:
            raise ValueError(f"grid_side must be odd for lattice carving, got {side}")
        if self.max_attempts < 1:
            raise ValueError("max_attempts must be >= 1")
        return replace(
            self,
            grid_side=side,
            dead_end_count=self.dead_end_count if self.dead_end_count is not None else k,
            misleading_count=(
                self.misleading_count if self.misleading_count is not None else min(k - 1, 3)
            ),
        )


def _carve_perfect(side: int, rng: random.Random) -> set[Coord]:
    """Randomized depth-first carving on the odd-cell lattice.

    Returns the passable set; the result is a tree, so every pair of passable
    cells is joined by exactly one simple path.
    """
    rooms = [Coord(r, c) for r in range(1, side, 2) for c in range(1, side, 2)]
    passable: set[Coord] = {rooms[0]}
    stack = [rooms[0]]
    visited = {rooms[0]}
    while stack:
        cell = stack[-1]
        options = []
        for d in DIRECTION_ORDER:
            nxt = cell.step(d).step(d)
            if 0 < nxt.row < side and 0 < nxt.col < side and nxt not in visited:
                options.append((d, nxt))
        if not options:
            stack.pop()
            continue
        d, nxt = rng.choice(options)
        visited.add(nxt)
        passable.add(cell.step(d))
        passable.add(nxt)
        stack.append(nxt)
    return passable


def _tree_path(parents: dict[Coord, tuple[Coord, Direction] | None], dest: Coord) -> Trajectory:
    moves: list[Direction] = []
    cell = dest
    while parents[cell] is not None:
        prev, d = parents[cell]  # type: ignore[misc]
        moves.append(d)
        cell = prev
    moves.reverse()
    return tuple(moves)


def _bfs_parents(passable: set[Coord], source: Coord) -> dict[Coord, tuple[Coord, Direction] | None]:
    from collections import deque

    parents: dict[Coord, tuple[Coord, Direction] | None] = {source: None}
    queue = deque([source])
    while queue:
        cell = queue.popleft()
        for d in DIRECTION_ORDER:
            nxt = cell.step(d)
            if nxt in passable and nxt not in parents:
                parents[nxt] = (cell, d)
                queue.append(nxt)
    return parents


def generate(cfg: GenConfig) -> Maze:
    """Build one maze honoring the tier's turn range; deterministic per seed."""
    cfg = cfg.resolved()
    rng = random.Random(cfg.seed)
    side = cfg.grid_side
    lo, hi = cfg.tier.turn_range
    min_len = cfg.tier.m + 1  # a path with m turns needs at least m + 1 moves

    for _ in range(cfg.max_attempts):
        passable = _carve_perfect(side, rng)
        cells = sorted(passable)
        start = rng.choice(cells)
        parents = _bfs_parents(passable, start)
        candidates = [c for c in cells if c != start]
        rng.shuffle(candidates)
        for dest in candidates:
            path = _tree_path(parents, dest)
            if len(path) < min_len:
                continue
            if lo <= count_turns(path) <= hi:
                maze = Maze(
                    width=side,
                    height=side,
                    obstacles=frozenset(
                        Coord(r, c)
                        for r in range(side)
                        for c in range(side)
                        if Coord(r, c) not in passable
                    ),
                    start=start,
                    destination=dest,
                    optimal_path=path,
                    tier=cfg.tier.k,
                    seed=cfg.seed,
                )
                return _finalize(maze, cfg, rng)
    raise GenerationBudgetExhausted(
        f"no tier-{cfg.tier.k} maze (turns in [{lo}, {hi}]) on a {side}x{side} grid "
        f"within {cfg.max_attempts} carves"
    )


def _finalize(maze: Maze, cfg: GenConfig, rng: random.Random) -> Maze:
    before = maze.optimal_path
    maze = inject_dead_ends(maze, cfg.dead_end_count or 0, rng)
    maze = place_misleading(maze, cfg.misleading_count or 0, rng)
    solved = shortest_path(maze)
    assert solved.path == before, "decoy injection must not move the optimal path"
    maze = replace(maze, optimal_path=solved.path)
    maze = replace(maze, turn_points=tuple(annotate_turnpoints(maze)))
    problems = validate_maze(maze)
    assert not problems, f"generated maze failed validation: {problems}"
    return maze


def annotate_turnpoints(maze: Maze) -> list[Coord]:
    """Turn points along the optimal path, ordered by path position.

    A cell qualifies if the path changes direction there, or if it is a
    junction (three or more passable neighbors) the path passes through.
    """
    cells = maze.path_cells()
    moves = maze.optimal_path
    out: list[Coord] = []
    for i, cell in enumerate(cells):
        direction_change = 0 < i < len(moves) and moves[i] != moves[i - 1]
        junction = len(maze.passable_neighbors(cell)) >= 3
        if direction_change or junction:
            out.append(cell)
    return out


def inject_dead_ends(maze: Maze, count: int, rng: random.Random) -> Maze:
    """Carve up to `count` dead-end stubs branching off the optimal path.

    Every carved cell has exactly one passable neighbor at carve time, so the
    maze stays a tree and the optimal path (length, turns, route) is
    untouched. Injects fewer stubs silently when geometry runs out.
    """
    if count <= 0:
        return maze
    obstacles = set(maze.obstacles)
    on_path = set(maze.path_cells())

    def passable(c: Coord) -> bool:
        return maze.in_bounds(c) and c not in obstacles

    def single_neighbor(c: Coord) -> Coord | None:
        ps = [c.step(d) for d in DIRECTION_ORDER if passable(c.step(d))]
        return ps[0] if len(ps) == 1 else None

    carved = 0
    for _ in range(count):
        # in a fully carved lattice only wall cells with one passable
        # neighbor qualify; carving them keeps the maze a tree
        candidates = sorted(
            {
                c
                for c in (p.step(d) for p in on_path for d in DIRECTION_ORDER)
                if maze.in_bounds(c) and c in obstacles and single_neighbor(c) in on_path
            }
        )
        if not candidates:
            break
        head = rng.choice(candidates)
        obstacles.discard(head)
        for _ in range(rng.randint(0, 2)):  # stubs are 1-3 cells long
            extensions = sorted(
                c
                for c in (head.step(d) for d in DIRECTION_ORDER)
                if maze.in_bounds(c) and c in obstacles and single_neighbor(c) == head
            )
            if not extensions:
                break
            head = rng.choice(extensions)
            obstacles.discard(head)
        carved += 1
    if carved == 0:
        return maze
    return replace(maze, obstacles=frozenset(obstacles))


def place_misleading(maze: Maze, count: int, rng: random.Random) -> Maze:
    """Mark up to `count` reachable off-path cells as misleading destinations."""
    if count <= 0:
        return maze
    from .solve import _distances

    reachable = _distances(maze, maze.start)
    excluded = set(maze.path_cells()) | {maze.start, maze.destination}
    excluded.update(maze.misleading_destinations)
    candidates = sorted(c for c in reachable if c not in excluded)
    if not candidates:
        return maze
    picked = rng.sample(candidates, min(count, len(candidates)))
    return replace(
        maze,
        misleading_destinations=maze.misleading_destinations + tuple(sorted(picked)),
    )
