"""Solver against the brute-force enumeration oracle."""

import random

import pytest

from mazekit.grid import Coord, Direction
from mazekit.selfcheck import random_open_maze
from mazekit.solve import (
    EnumerationGuard,
    OffOptimalPrefix,
    UnsolvableMaze,
    count_turns,
    enumerate_paths,
    optimal_next,
    shortest_path,
)

from conftest import finished_maze


def test_shortest_empty_3x3(empty_3x3):
    solution = shortest_path(empty_3x3)
    assert solution.length == 4
    assert len(solution.path) == 4
    assert not solution.is_unique  # six shortest paths on the open grid


def test_shortest_canonical_tie_break(empty_3x3):
    # up < down < left < right makes the down-first path canonical
    assert shortest_path(empty_3x3).path == (
        Direction.DOWN, Direction.DOWN, Direction.RIGHT, Direction.RIGHT,
    )


def test_unsolvable_corridor():
    from mazekit.grid import Maze

    maze = Maze(width=3, height=1, obstacles=frozenset([Coord(0, 1)]),
                start=Coord(0, 0), destination=Coord(0, 2))
    with pytest.raises(UnsolvableMaze):
        shortest_path(maze)


def test_enumerate_2x2():
    maze = finished_maze(2, 2, [], (0, 0), (1, 1))
    paths = enumerate_paths(maze, max_len=2)
    assert len(paths) == 2
    assert all(len(p) == 2 for p in paths)


def test_enumerate_single_corridor():
    maze = finished_maze(2, 1, [], (0, 0), (0, 1))
    assert enumerate_paths(maze, max_len=5) == [(Direction.RIGHT,)]


def test_enumerate_lattice_count(empty_3x3):
    # C(4, 2) = 6 shortest corner-to-corner routes
    paths = enumerate_paths(empty_3x3, max_len=4)
    assert len(paths) == 6


def test_enumerate_guard():
    big = finished_maze(9, 9, [], (0, 0), (8, 8))
    with pytest.raises(EnumerationGuard):
        enumerate_paths(big, max_len=4)
    small = finished_maze(2, 2, [], (0, 0), (1, 1))
    with pytest.raises(EnumerationGuard):
        enumerate_paths(small, max_len=25)


def test_oracle_equivalence_sampled():
    rng = random.Random(20)
    checked = 0
    while checked < 60:
        maze = random_open_maze(rng)
        if maze is None:
            continue
        solution = shortest_path(maze)
        paths = enumerate_paths(maze, max_len=min(20, solution.length + 3))
        assert solution.length == min(len(p) for p in paths)
        shortest = [p for p in paths if len(p) == solution.length]
        assert solution.path in shortest
        assert solution.is_unique == (len(shortest) == 1)
        checked += 1


def test_optimal_next_symmetric_start(empty_3x3):
    assert optimal_next(empty_3x3, ()) == {Direction.DOWN, Direction.RIGHT}


def test_optimal_next_forced_edge(empty_3x3):
    assert optimal_next(empty_3x3, (Direction.DOWN, Direction.DOWN)) == {Direction.RIGHT}


def test_optimal_next_unique_path_singleton():
    rng = random.Random(77)
    found = 0
    while found < 10:
        maze = random_open_maze(rng)
        if maze is None:
            continue
        solution = shortest_path(maze)
        if not solution.is_unique or solution.length < 2:
            continue
        for k in range(solution.length):
            nexts = optimal_next(maze, solution.path[:k])
            assert nexts == {solution.path[k]}
        found += 1


def test_optimal_next_prefix_property():
    rng = random.Random(88)
    checked = 0
    while checked < 30:
        maze = random_open_maze(rng)
        if maze is None:
            continue
        path = shortest_path(maze).path
        for k in range(len(path)):
            assert path[k] in optimal_next(maze, path[:k])
        checked += 1


def test_optimal_next_rejects_off_optimal(empty_3x3):
    # a wandering (but valid) prefix that can no longer be optimal
    with pytest.raises(OffOptimalPrefix):
        optimal_next(empty_3x3, (Direction.DOWN, Direction.UP))


def test_count_turns():
    up, right, down = Direction.UP, Direction.RIGHT, Direction.DOWN
    assert count_turns(()) == 0
    assert count_turns((up,)) == 0
    assert count_turns((up, up, up)) == 0
    assert count_turns((up, right, up)) == 2
    assert count_turns((down, down, right, right)) == 1


def test_count_turns_survives_serialization():
    from mazekit.grid import maze_from_json, maze_to_json

    rng = random.Random(31)
    maze = None
    while maze is None:
        maze = random_open_maze(rng)
    reloaded = maze_from_json(maze_to_json(maze))
    assert count_turns(reloaded.optimal_path) == count_turns(maze.optimal_path)
