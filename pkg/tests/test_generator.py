"""Maze generation: calibration, decoys, annotation, determinism."""

import random
from dataclasses import replace

import pytest

from mazekit.generate import (
    DifficultyTier,
    GenConfig,
    GenerationBudgetExhausted,
    annotate_turnpoints,
    generate,
    inject_dead_ends,
    place_misleading,
)
from mazekit.grid import Coord, maze_to_json, validate_maze
from mazekit.solve import _distances, count_turns, shortest_path

from conftest import finished_maze


def test_tier_parameters():
    assert DifficultyTier(1).m == 1 and DifficultyTier(1).turn_range == (1, 3)
    assert DifficultyTier(3).m == 5 and DifficultyTier(3).turn_range == (5, 7)
    assert DifficultyTier(6).m == 11 and DifficultyTier(6).turn_range == (11, 13)
    with pytest.raises(ValueError):
        DifficultyTier(0)


def test_config_defaults_scale_with_tier():
    cfg = GenConfig(tier=DifficultyTier(4)).resolved()
    assert cfg.grid_side == 13  # m + 6
    assert cfg.dead_end_count == 4
    assert cfg.misleading_count == 3
    with pytest.raises(ValueError):
        GenConfig(tier=DifficultyTier(6), grid_side=13).resolved()
    with pytest.raises(ValueError):
        GenConfig(tier=DifficultyTier(1), grid_side=8).resolved()


@pytest.mark.parametrize("k", [1, 2, 3, 4, 5, 6])
def test_turn_calibration_per_tier(k):
    lo, hi = 2 * k - 1, 2 * k + 1
    for i in range(20):
        maze = generate(GenConfig(tier=DifficultyTier(k), seed=9000 * k + i))
        assert lo <= count_turns(maze.optimal_path) <= hi
        assert not validate_maze(maze)


def test_generation_deterministic_per_seed():
    cfg = GenConfig(tier=DifficultyTier(3), seed=424242)
    assert maze_to_json(generate(cfg)) == maze_to_json(generate(cfg))


def test_generation_budget_error_path(monkeypatch):
    # force every carve to miss the turn range so the rejection budget runs out
    import sys

    gen_module = sys.modules["mazekit.generate"]
    monkeypatch.setattr(gen_module, "count_turns", lambda path: -1)
    with pytest.raises(GenerationBudgetExhausted):
        generate(GenConfig(tier=DifficultyTier(1), seed=0, max_attempts=3))


def test_dead_end_injection_is_identity_at_zero():
    maze = generate(GenConfig(tier=DifficultyTier(2), seed=5, dead_end_count=0, misleading_count=0))
    rng = random.Random(0)
    assert inject_dead_ends(maze, 0, rng) is maze


def test_dead_end_injection_preserves_solution():
    base = generate(GenConfig(tier=DifficultyTier(2), seed=6, dead_end_count=0, misleading_count=0))
    rng = random.Random(1)
    spiked = inject_dead_ends(base, 4, rng)
    before, after = shortest_path(base), shortest_path(spiked)
    assert before.path == after.path
    assert before.length == after.length
    assert count_turns(before.path) == count_turns(after.path)
    assert base.obstacles >= spiked.obstacles  # only carves, never walls off


def test_dead_end_stub_audit():
    base = generate(GenConfig(tier=DifficultyTier(3), seed=11, dead_end_count=0, misleading_count=0))
    rng = random.Random(2)
    spiked = inject_dead_ends(base, 3, rng)
    carved = sorted(base.obstacles - spiked.obstacles)
    assert carved, "no stub carved on a tier-3 maze"
    on_path = set(base.path_cells())
    # group carved cells into connected stubs
    remaining = set(carved)
    stubs = []
    while remaining:
        seed_cell = remaining.pop()
        component = {seed_cell}
        frontier = [seed_cell]
        while frontier:
            cell = frontier.pop()
            for d in (Coord(1, 0), Coord(-1, 0), Coord(0, 1), Coord(0, -1)):
                n = Coord(cell.row + d.row, cell.col + d.col)
                if n in remaining:
                    remaining.remove(n)
                    component.add(n)
                    frontier.append(n)
        stubs.append(component)
    for stub in stubs:
        terminals = [c for c in stub if len(spiked.passable_neighbors(c)) == 1]
        assert terminals, f"stub {sorted(stub)} has no dead-end terminal"
        anchors = {
            n
            for c in stub
            for n in spiked.passable_neighbors(c)
            if n not in stub
        }
        assert len(anchors) == 1, "stub must branch from exactly one corridor cell"
        assert anchors <= on_path, "stub must branch off the optimal path"


def test_misleading_placement_audits():
    base = generate(GenConfig(tier=DifficultyTier(2), seed=12, misleading_count=0))
    rng = random.Random(3)
    marked = place_misleading(base, 2, rng)
    assert place_misleading(base, 0, rng) is base
    assert len(marked.misleading_destinations) == 2
    reachable = set(_distances(marked, marked.start))
    path_cells = set(marked.path_cells())
    for cell in marked.misleading_destinations:
        assert cell in reachable
        assert cell not in path_cells
        assert cell != marked.destination


def test_annotation_straight_corridor():
    maze = finished_maze(4, 1, [], (0, 0), (0, 3))
    assert annotate_turnpoints(maze) == []


def test_annotation_l_corner(l_maze):
    # path [down, down, right, right] turns exactly at (2, 0)
    assert annotate_turnpoints(l_maze) == [Coord(2, 0)]


def test_annotation_count_matches_turns():
    maze = generate(GenConfig(tier=DifficultyTier(2), seed=21))
    annotated = set(annotate_turnpoints(maze))
    cells = maze.path_cells()
    moves = maze.optimal_path
    direction_changes = {cells[i] for i in range(1, len(moves)) if moves[i] != moves[i - 1]}
    assert direction_changes <= annotated
    assert len(direction_changes) == count_turns(maze.optimal_path)
    assert len(annotated) >= count_turns(maze.optimal_path)


def test_annotation_is_path_ordered():
    maze = generate(GenConfig(tier=DifficultyTier(3), seed=22))
    cells = maze.path_cells()
    order = {cell: i for i, cell in enumerate(cells)}
    positions = [order[c] for c in annotate_turnpoints(maze)]
    assert positions == sorted(positions)


def test_generated_maze_passes_all_invariants():
    for k in (1, 4, 6):
        maze = generate(GenConfig(tier=DifficultyTier(k), seed=k))
        assert validate_maze(maze) == []
        assert maze.tier == k
