"""mazekit: maze benchmark generation, navigation scoring, and
segment-level preference-pair construction for LLM evaluation."""

from .generate import DifficultyTier, GenConfig, annotate_turnpoints, generate
from .grid import (
    Coord,
    Direction,
    ExecutionTrace,
    InvalidMove,
    Maze,
    apply_move,
    execute,
    is_turn,
    maze_from_json,
    maze_to_json,
)
from .metrics import RouteScore, ScoreReport, aggregate, score_choice, score_route
from .pairs import (
    ERROR_KINDS,
    PreferencePair,
    build_pair,
    divergence_index,
    extract_segments,
    synthesize_negative,
)
from .parsing import (
    ConsistencyReport,
    ParsedResponse,
    check_consistency,
    parse_choice,
    parse_direction_list,
    parse_star_session,
)
from .prompts import GlyphTable, StarSession, render_map, render_prompt, render_star_session
from .solve import PathSolution, count_turns, enumerate_paths, optimal_next, shortest_path
from .tasks import (
    DatasetConfig,
    TaskInstance,
    build_dataset,
    build_next_step,
    build_route_planning,
    build_rule_qa,
    build_turnpoint_qa,
)

__version__ = "0.1.0"
