"""Grid primitives: moves, execution traces, serialization."""

import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mazekit.grid import (
    Coord,
    Direction,
    InvalidMove,
    apply_move,
    execute,
    is_turn,
    maze_from_json,
    maze_from_record,
    maze_to_json,
    maze_to_record,
)
from mazekit.selfcheck import random_open_maze, random_trajectory

from conftest import finished_maze


def test_apply_move_orthogonal_step():
    maze = finished_maze(5, 5, [], (0, 0), (4, 4))
    assert apply_move(maze, Coord(2, 2), Direction.UP) == Coord(1, 2)
    assert apply_move(maze, Coord(2, 2), Direction.DOWN) == Coord(3, 2)
    assert apply_move(maze, Coord(2, 2), Direction.LEFT) == Coord(2, 1)
    assert apply_move(maze, Coord(2, 2), Direction.RIGHT) == Coord(2, 3)


def test_apply_move_boundary_exit():
    maze = finished_maze(5, 5, [], (0, 0), (4, 4))
    with pytest.raises(InvalidMove) as err:
        apply_move(maze, Coord(0, 0), Direction.UP)
    assert err.value.kind == "boundary"
    assert err.value.target == Coord(-1, 0)


def test_apply_move_obstacle_collision():
    maze = finished_maze(3, 3, [(1, 2)], (0, 0), (2, 2))
    with pytest.raises(InvalidMove) as err:
        apply_move(maze, Coord(1, 1), Direction.RIGHT)
    assert err.value.kind == "obstacle"
    assert err.value.target == Coord(1, 2)


def test_apply_move_exhaustive_on_small_grid():
    # success iff the target is in-bounds and passable, for every cell/direction
    maze = finished_maze(4, 3, [(1, 1), (2, 3)], (0, 0), (2, 2))
    for r in range(maze.height):
        for c in range(maze.width):
            cell = Coord(r, c)
            if not maze.passable(cell):
                continue
            for d in Direction:
                target = cell.step(d)
                should_work = maze.passable(target)
                try:
                    result = apply_move(maze, cell, d)
                    assert should_work and result == target
                except InvalidMove:
                    assert not should_work


def test_execute_full_path(empty_3x3):
    moves = (Direction.DOWN, Direction.DOWN, Direction.RIGHT, Direction.RIGHT)
    trace = execute(empty_3x3, moves)
    assert len(trace.positions) == 5
    assert trace.first_invalid is None
    assert trace.reached_destination


def test_execute_immediate_boundary(empty_3x3):
    trace = execute(empty_3x3, (Direction.UP,))
    assert trace.first_invalid == 0
    assert trace.positions == (Coord(0, 0),)
    assert not trace.reached_destination


def test_execute_collision_first_step():
    maze = finished_maze(3, 3, [(1, 0)], (0, 0), (2, 2))
    trace = execute(maze, (Direction.DOWN, Direction.DOWN))
    assert trace.first_invalid == 0
    assert trace.positions == (Coord(0, 0),)


def test_execute_transit_does_not_count_as_arrival(empty_3x3):
    # walk onto the destination and then away: not "reached"
    through = (Direction.DOWN, Direction.DOWN, Direction.RIGHT, Direction.RIGHT, Direction.UP)
    trace = execute(empty_3x3, through)
    assert trace.first_invalid is None
    assert Coord(2, 2) in trace.positions
    assert not trace.reached_destination


def test_execute_step_cap(empty_3x3):
    runaway = (Direction.DOWN, Direction.UP) * 100
    trace = execute(empty_3x3, runaway, max_steps=10)
    assert trace.first_invalid == 10
    assert len(trace.positions) == 11


def test_execute_deterministic(empty_3x3):
    moves = (Direction.DOWN, Direction.RIGHT, Direction.DOWN, Direction.RIGHT)
    assert execute(empty_3x3, moves) == execute(empty_3x3, moves)


def test_is_turn():
    assert not is_turn(Direction.UP, Direction.UP)
    assert is_turn(Direction.UP, Direction.LEFT)
    assert is_turn(Direction.UP, Direction.DOWN)  # reversal counts


def test_direction_is_cardinal_only():
    assert {d.value for d in Direction} == {"up", "down", "left", "right"}
    with pytest.raises(ValueError):
        Direction("northeast")


def test_maze_record_round_trip():
    rng = random.Random(5)
    for _ in range(20):
        maze = random_open_maze(rng)
        if maze is None:
            continue
        record = maze_to_record(maze)
        assert maze_from_record(record) == maze
        assert maze_from_json(maze_to_json(maze)) == maze
        # fixed schema keys, serialized directions are lowercase words
        assert set(record) == {
            "width", "height", "start", "destination", "misleading",
            "obstacles", "turn_points", "optimal_path", "tier", "seed",
        }
        assert all(w in ("up", "down", "left", "right") for w in record["optimal_path"])


@given(st.integers(0, 2**32 - 1))
@settings(max_examples=60, deadline=None)
def test_execute_positions_are_contiguous(seed):
    rng = random.Random(seed)
    maze = random_open_maze(rng)
    if maze is None:
        return
    traj = random_trajectory(maze, rng)
    trace = execute(maze, traj)
    assert trace.positions[0] == maze.start
    for a, b in zip(trace.positions, trace.positions[1:]):
        assert abs(a.row - b.row) + abs(a.col - b.col) == 1
    if trace.first_invalid is not None:
        assert len(trace.positions) == trace.first_invalid + 1
    if trace.reached_destination:
        assert trace.positions[-1] == maze.destination
