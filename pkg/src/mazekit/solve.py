"""Exact grid pathfinding: BFS shortest paths, next-step ground truth, and a
brute-force enumeration oracle for tests.

Determinism matters more than speed here: tie-breaking among equal-length
paths always follows the fixed order up < down < left < right so that the
canonical path for a given maze never changes between runs.
"""

from __future__ import annotations

import sys
from collections import deque
from dataclasses import dataclass

from .grid import DIRECTION_ORDER, Coord, Direction, Maze, Trajectory, execute

ENUM_MAX_LEN = 20
ENUM_MAX_AREA = 64


class UnsolvableMaze(Exception):
    """Start and destination lie in different connected components."""


class OffOptimalPrefix(Exception):
    """The prefix cannot be extended to any shortest path."""


class EnumerationGuard(Exception):
    """Instance too large for the brute-force oracle."""


@dataclass(frozen=True)
class PathSolution:
    path: Trajectory
    length: int
    is_unique: bool


def _distances(maze: Maze, source: Coord) -> dict[Coord, int]:
    """BFS distance map over passable cells reachable from source."""
    dist = {source: 0}
    queue = deque([source])
    while queue:
        cell = queue.popleft()
        d = dist[cell]
        for nxt in maze.passable_neighbors(cell):
            if nxt not in dist:
                dist[nxt] = d + 1
                queue.append(nxt)
    return dist


def shortest_path(maze: Maze) -> PathSolution:
    """Canonical shortest start->destination trajectory.

    Among equal-length paths, picks the one whose direction sequence is
    smallest under up < down < left < right, by walking the distance field
    greedily. Raises UnsolvableMaze when no path exists.
    """
    to_dest = _distances(maze, maze.destination)
    if maze.start not in to_dest:
        raise UnsolvableMaze(f"no path from {tuple(maze.start)} to {tuple(maze.destination)}")
    total = to_dest[maze.start]
    moves: list[Direction] = []
    pos = maze.start
    while pos != maze.destination:
        for d in DIRECTION_ORDER:
            nxt = pos.step(d)
            if maze.passable(nxt) and to_dest.get(nxt, -1) == to_dest[pos] - 1:
                moves.append(d)
                pos = nxt
                break
    return PathSolution(tuple(moves), total, _count_shortest(maze, to_dest) == 1)


def _count_shortest(maze: Maze, to_dest: dict[Coord, int]) -> int:
    """Number of distinct shortest paths, by DP over the distance DAG."""
    counts = {maze.destination: 1}

    def count(cell: Coord) -> int:
        if cell in counts:
            return counts[cell]
        total = 0
        for d in DIRECTION_ORDER:
            nxt = cell.step(d)
            if maze.passable(nxt) and to_dest.get(nxt, -1) == to_dest[cell] - 1:
                total += count(nxt)
        counts[cell] = total
        return total

    # Recursion depth is bounded by path length; grids here are small.
    old = sys.getrecursionlimit()
    sys.setrecursionlimit(max(old, to_dest[maze.start] + 100))
    try:
        return count(maze.start)
    finally:
        sys.setrecursionlimit(old)


def enumerate_paths(maze: Maze, max_len: int) -> list[Trajectory]:
    """Exhaustive DFS over all simple start->destination paths of length <= max_len.

    Test oracle only; guarded to stay sub-second. Deterministic order: moves
    are tried in the fixed direction order at every depth.
    """
    if max_len > ENUM_MAX_LEN or maze.width * maze.height > ENUM_MAX_AREA:
        raise EnumerationGuard(
            f"max_len {max_len} / area {maze.width * maze.height} exceeds the "
            f"{ENUM_MAX_LEN}-step / {ENUM_MAX_AREA}-cell guard"
        )
    found: list[Trajectory] = []
    moves: list[Direction] = []
    visited = {maze.start}

    def walk(pos: Coord) -> None:
        if pos == maze.destination:
            found.append(tuple(moves))
            return
        if len(moves) >= max_len:
            return
        for d in DIRECTION_ORDER:
            nxt = pos.step(d)
            if maze.passable(nxt) and nxt not in visited:
                visited.add(nxt)
                moves.append(d)
                walk(nxt)
                moves.pop()
                visited.remove(nxt)

    walk(maze.start)
    return found


def optimal_next(maze: Maze, prefix: Trajectory) -> set[Direction]:
    """Every direction that extends the prefix along some shortest path.

    Raises OffOptimalPrefix when the executed prefix cannot be part of any
    shortest path (task builders must never emit such instances).
    """
    trace = execute(maze, prefix)
    if trace.first_invalid is not None:
        raise OffOptimalPrefix(f"prefix invalid at step {trace.first_invalid}")
    to_dest = _distances(maze, maze.destination)
    from_start = _distances(maze, maze.start)
    if maze.start not in to_dest:
        raise UnsolvableMaze(f"no path from {tuple(maze.start)} to {tuple(maze.destination)}")
    pos = trace.positions[-1]
    k = len(prefix)
    total = to_dest[maze.start]
    if from_start.get(pos) != k or k + to_dest.get(pos, -1) != total:
        raise OffOptimalPrefix(f"prefix of length {k} ending at {tuple(pos)} is off every shortest path")
    out = set()
    for d in DIRECTION_ORDER:
        nxt = pos.step(d)
        if maze.passable(nxt) and to_dest.get(nxt, -1) == to_dest[pos] - 1:
            out.add(d)
    return out


def count_turns(traj: Trajectory) -> int:
    """Number of direction changes along a trajectory (reversals included)."""
    return sum(1 for a, b in zip(traj, traj[1:]) if a != b)
