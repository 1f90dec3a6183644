"""Grid-world primitives: cells, moves, mazes, and trajectory execution.

Coordinate convention is (row, col) with row 0 at the top, so "up" decreases
the row index. This matches the top-down text rendering used in prompts.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass
from typing import Iterable, NamedTuple


class Direction(enum.Enum):
    """One of the four cardinal moves. No diagonal is representable."""

    UP = "up"
    DOWN = "down"
    LEFT = "left"
    RIGHT = "right"

    @property
    def delta(self) -> tuple[int, int]:
        return _DELTAS[self]

    @property
    def opposite(self) -> "Direction":
        return _OPPOSITES[self]

    def __repr__(self) -> str:  # keeps test diffs readable
        return f"Direction.{self.name}"


_DELTAS = {
    Direction.UP: (-1, 0),
    Direction.DOWN: (1, 0),
    Direction.LEFT: (0, -1),
    Direction.RIGHT: (0, 1),
}

_OPPOSITES = {
    Direction.UP: Direction.DOWN,
    Direction.DOWN: Direction.UP,
    Direction.LEFT: Direction.RIGHT,
    Direction.RIGHT: Direction.LEFT,
}

# Fixed tie-breaking order used by the solver and all deterministic iteration.
DIRECTION_ORDER = (Direction.UP, Direction.DOWN, Direction.LEFT, Direction.RIGHT)


class Coord(NamedTuple):
    row: int
    col: int

    def step(self, direction: Direction) -> "Coord":
        dr, dc = direction.delta
        return Coord(self.row + dr, self.col + dc)


Trajectory = tuple[Direction, ...]


def parse_direction(word: str) -> Direction:
    """Case-insensitive direction lookup; raises ValueError on anything else."""
    try:
        return Direction(word.strip().lower())
    except ValueError:
        raise ValueError(f"not a direction: {word!r}") from None


def trajectory_from_words(words: Iterable[str]) -> Trajectory:
    return tuple(parse_direction(w) for w in words)


def trajectory_to_words(traj: Trajectory) -> list[str]:
    return [d.value for d in traj]


class InvalidMove(Exception):
    """A move off the grid or into an obstacle.

    kind is "boundary" or "obstacle"; target is the offending cell.
    """

    def __init__(self, kind: str, target: Coord):
        self.kind = kind
        self.target = target
        super().__init__(f"{kind} move into {tuple(target)}")


@dataclass(frozen=True)
class Maze:
    """Immutable grid world with obstacles, endpoints, and annotations.

    optimal_path is the canonical shortest start->destination trajectory;
    turn_points are the annotated decision cells along it.
    """

    width: int
    height: int
    obstacles: frozenset[Coord]
    start: Coord
    destination: Coord
    misleading_destinations: tuple[Coord, ...] = ()
    turn_points: tuple[Coord, ...] = ()
    optimal_path: Trajectory = ()
    tier: int = 0
    seed: int = 0

    def in_bounds(self, cell: Coord) -> bool:
        return 0 <= cell.row < self.height and 0 <= cell.col < self.width

    def passable(self, cell: Coord) -> bool:
        return self.in_bounds(cell) and cell not in self.obstacles

    def passable_neighbors(self, cell: Coord) -> list[Coord]:
        """Orthogonally adjacent passable cells, in fixed direction order."""
        out = []
        for d in DIRECTION_ORDER:
            n = cell.step(d)
            if self.passable(n):
                out.append(n)
        return out

    def path_cells(self, traj: Trajectory | None = None) -> list[Coord]:
        """Cells visited by a trajectory (default: the optimal path), start included."""
        moves = self.optimal_path if traj is None else traj
        cells = [self.start]
        for m in moves:
            cells.append(cells[-1].step(m))
        return cells

    @property
    def step_cap(self) -> int:
        """Hard trajectory-length cap; bounds runaway model outputs."""
        return 4 * self.width * self.height


@dataclass(frozen=True)
class ExecutionTrace:
    """Result of running a trajectory: positions visited and where it broke.

    positions[0] is the maze start; if first_invalid == i, execution halted
    before applying move i and positions has exactly i + 1 entries.
    """

    positions: tuple[Coord, ...]
    first_invalid: int | None = None
    reached_destination: bool = False


def apply_move(maze: Maze, at: Coord, direction: Direction) -> Coord:
    """Single-step transition. Raises InvalidMove on boundary exit or collision."""
    target = at.step(direction)
    if not maze.in_bounds(target):
        raise InvalidMove("boundary", target)
    if target in maze.obstacles:
        raise InvalidMove("obstacle", target)
    return target


def execute(maze: Maze, traj: Trajectory, max_steps: int | None = None) -> ExecutionTrace:
    """Run a trajectory from the start, halting at the first invalid move.

    Invalidity is data, not an error: the trace records the halt index.
    Moves beyond max_steps (default: the maze's step cap) count as invalid
    at the cap index. reached_destination requires the trajectory to both
    execute fully and terminate on the destination; passing through the
    destination mid-path does not count.
    """
    cap = maze.step_cap if max_steps is None else max_steps
    positions = [maze.start]
    first_invalid = None
    for i, move in enumerate(traj):
        if i >= cap:
            first_invalid = i
            break
        try:
            positions.append(apply_move(maze, positions[-1], move))
        except InvalidMove:
            first_invalid = i
            break
    reached = first_invalid is None and positions[-1] == maze.destination
    return ExecutionTrace(tuple(positions), first_invalid, reached)


def is_turn(prev: Direction, nxt: Direction) -> bool:
    """True iff the direction changes; a reversal counts as a turn."""
    return prev != nxt


def validate_maze(maze: Maze) -> list[str]:
    """Check every structural invariant; returns a list of violations (empty = ok)."""
    problems = []
    for label, cell in [("start", maze.start), ("destination", maze.destination)]:
        if not maze.passable(cell):
            problems.append(f"{label} {tuple(cell)} is out of bounds or an obstacle")
    for cell in maze.misleading_destinations:
        if not maze.passable(cell):
            problems.append(f"misleading destination {tuple(cell)} not passable")
    if maze.destination in maze.misleading_destinations:
        problems.append("true destination listed as misleading")
    if maze.start == maze.destination:
        problems.append("start equals destination")
    trace = execute(maze, maze.optimal_path)
    if trace.first_invalid is not None:
        problems.append(f"optimal path invalid at step {trace.first_invalid}")
    elif not trace.reached_destination:
        problems.append("optimal path does not end on the destination")
    on_path = set(maze.path_cells())
    for cell in maze.turn_points:
        if not maze.passable(cell):
            problems.append(f"turn point {tuple(cell)} not passable")
        elif cell not in on_path and len(maze.passable_neighbors(cell)) < 3:
            problems.append(f"turn point {tuple(cell)} neither on path nor a junction")
    return problems


def maze_to_record(maze: Maze) -> dict:
    """JSON-ready dict; list fields are sorted or path-ordered for reproducibility."""
    return {
        "width": maze.width,
        "height": maze.height,
        "start": list(maze.start),
        "destination": list(maze.destination),
        "misleading": [list(c) for c in maze.misleading_destinations],
        "obstacles": [list(c) for c in sorted(maze.obstacles)],
        "turn_points": [list(c) for c in maze.turn_points],
        "optimal_path": trajectory_to_words(maze.optimal_path),
        "tier": maze.tier,
        "seed": maze.seed,
    }


def maze_from_record(record: dict) -> Maze:
    return Maze(
        width=record["width"],
        height=record["height"],
        obstacles=frozenset(Coord(*c) for c in record["obstacles"]),
        start=Coord(*record["start"]),
        destination=Coord(*record["destination"]),
        misleading_destinations=tuple(Coord(*c) for c in record["misleading"]),
        turn_points=tuple(Coord(*c) for c in record["turn_points"]),
        optimal_path=trajectory_from_words(record["optimal_path"]),
        tier=record["tier"],
        seed=record["seed"],
    )


def maze_to_json(maze: Maze) -> str:
    return json.dumps(maze_to_record(maze), separators=(",", ":"))


def maze_from_json(line: str) -> Maze:
    return maze_from_record(json.loads(line))
