"""Text-grid map rendering and prompt/session templating.

Templates live as fixture files under templates/, one per (family, style).
Bracketed tokens come in two kinds: glyph tokens ([START], [OBST], ...) that
a GlyphTable substitutes, and content slots ([Grid Layout], [Path List], ...)
filled per instance. Any other bracketed span is model-facing scaffold and
stays literal. Fixture lines starting with "#~" are stripped at load.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from importlib import resources

from .grid import Coord, Direction, InvalidMove, Maze, Trajectory, apply_move, trajectory_to_words

STYLES = ("cot", "vot", "star")
FAMILIES = ("route_planning", "next_step", "turnpoint", "rule")

# Fixed option lettering for next-step multiple choice.
OPTION_LETTERS = {"A": Direction.LEFT, "B": Direction.RIGHT, "C": Direction.UP, "D": Direction.DOWN}
LETTER_FOR_DIRECTION = {d: letter for letter, d in OPTION_LETTERS.items()}


class UnsupportedPromptStyle(Exception):
    """No template exists for this family/style combination."""


class InvalidTrajectory(Exception):
    """A session was requested for a trajectory that does not execute."""


@dataclass(frozen=True)
class GlyphTable:
    """Rendering tokens for the seven cell roles.

    misleading defaults to the destination glyph (maximally deceptive); all
    other glyphs must be pairwise distinct.
    """

    start: str = "S"
    destination: str = "D"
    turn_point: str = "T"
    road: str = "."
    obstacle: str = "#"
    user_icon: str = "@"
    misleading: str | None = None

    def __post_init__(self):
        core = [self.start, self.destination, self.turn_point, self.road, self.obstacle, self.user_icon]
        if len(set(core)) != len(core):
            raise ValueError("glyphs must be pairwise distinct")
        if self.misleading is not None and self.misleading in (
            self.start,
            self.turn_point,
            self.road,
            self.obstacle,
            self.user_icon,
        ):
            raise ValueError("misleading glyph may only coincide with the destination glyph")

    @property
    def misleading_glyph(self) -> str:
        return self.misleading if self.misleading is not None else self.destination

    def vocabulary(self) -> set[str]:
        return {self.start, self.destination, self.turn_point, self.road, self.obstacle, self.user_icon, self.misleading_glyph}


ASCII_GLYPHS = GlyphTable()
EMOJI_GLYPHS = GlyphTable(start="🏁", destination="🎯", turn_point="🔄", road="⬜", obstacle="⬛", user_icon="😀")
# Renders templates verbatim (glyph tokens map to themselves); used in golden tests.
PLACEHOLDER_GLYPHS = GlyphTable(
    start="[START]",
    destination="[DEST]",
    turn_point="[TP]",
    road="[ROAD]",
    obstacle="[OBST]",
    user_icon="[USER_ICON]",
)

GLYPH_PACKS = {"ascii": ASCII_GLYPHS, "emoji": EMOJI_GLYPHS}


@dataclass(frozen=True)
class StarStep:
    description: str
    move: Direction
    map_after: str | None


@dataclass(frozen=True)
class StarSession:
    """Step-block reasoning session: one block per move plus a summary line."""

    steps: tuple[StarStep, ...]
    summary: Trajectory

    @property
    def moves(self) -> Trajectory:
        return tuple(s.move for s in self.steps)


def render_map(
    maze: Maze,
    at: Coord | None = None,
    glyphs: GlyphTable = ASCII_GLYPHS,
    mark_turn_points: bool = True,
) -> str:
    """Render the maze as height lines of width space-joined tokens, row 0 first.

    The user icon (when `at` is given) overrides the underlying glyph.
    Newline-terminated and deterministic.
    """
    misleading = set(maze.misleading_destinations)
    turn_points = set(maze.turn_points) if mark_turn_points else set()
    lines = []
    for r in range(maze.height):
        row = []
        for c in range(maze.width):
            cell = Coord(r, c)
            if at is not None and cell == at:
                row.append(glyphs.user_icon)
            elif cell == maze.start:
                row.append(glyphs.start)
            elif cell == maze.destination:
                row.append(glyphs.destination)
            elif cell in misleading:
                row.append(glyphs.misleading_glyph)
            elif cell in turn_points:
                row.append(glyphs.turn_point)
            elif cell in maze.obstacles:
                row.append(glyphs.obstacle)
            else:
                row.append(glyphs.road)
        lines.append(" ".join(row))
    return "\n".join(lines) + "\n"


def _load_template(name: str) -> str:
    text = resources.files("mazekit.templates").joinpath(f"{name}.txt").read_text(encoding="utf-8")
    lines = [ln for ln in text.splitlines() if not ln.startswith("#~")]
    return "\n".join(lines).strip("\n") + "\n"


def _substitute(template: str, glyphs: GlyphTable, slots: dict[str, str]) -> str:
    out = template
    for token, value in slots.items():
        out = out.replace(token, value)
    for token, glyph in (
        ("[START]", glyphs.start),
        ("[DEST]", glyphs.destination),
        ("[TP]", glyphs.turn_point),
        ("[ROAD]", glyphs.road),
        ("[OBST]", glyphs.obstacle),
        ("[USER_ICON]", glyphs.user_icon),
    ):
        out = out.replace(token, glyph)
    return out


def word_list_text(words: list[str]) -> str:
    """The bracketed quoted-list form used in prompts and summaries."""
    return json.dumps(list(words)).replace('","', '", "')


def direction_list_text(traj: Trajectory) -> str:
    return word_list_text(trajectory_to_words(traj))


def render_prompt(instance, style: str, glyphs: GlyphTable = ASCII_GLYPHS) -> str:
    """Fill the (family, style) template for a task instance.

    `instance` is a tasks.TaskInstance. Raises UnsupportedPromptStyle for
    unknown styles or families.
    """
    if style not in STYLES:
        raise UnsupportedPromptStyle(f"unknown style {style!r}")
    if instance.family not in FAMILIES:
        raise UnsupportedPromptStyle(f"unknown family {instance.family!r}")
    maze = instance.maze
    if instance.family in ("route_planning", "next_step"):
        template = _load_template(f"{instance.family}_{style}")
    else:
        # TC/RU use one original template; the style contributes its
        # instruction line so cross-prompt comparisons stay meaningful.
        template = _load_template(f"{instance.family}_qa")
        template += {
            "cot": "Let's think step by step:\n",
            "vot": "Visualize the state after each reasoning step.\n",
            "star": "Visualize your thinking process step by step:\n",
        }[style]

    slots: dict[str, str] = {}
    if instance.family == "next_step":
        grid = render_map(maze, glyphs=glyphs)
        slots["[Grid Layout]"] = grid.rstrip("\n")
        slots["[Path List]"] = word_list_text(instance.payload["prefix"])
        slots["[Options]"] = ", ".join(f"{letter}: {d.value}" for letter, d in OPTION_LETTERS.items())
    elif instance.family == "route_planning":
        grid = render_map(maze, glyphs=glyphs)
        slots["[Full Grid Layout]"] = grid.rstrip("\n")
    elif instance.family == "turnpoint":
        grid = render_map(maze, glyphs=glyphs, mark_turn_points=False)
        slots["[Grid Layout]"] = grid.rstrip("\n")
        slots["[Question]"] = instance.payload["question"]
    else:  # rule
        grid = render_map(maze, glyphs=glyphs)
        slots["[Grid Layout]"] = grid.rstrip("\n")
        slots["[Question]"] = instance.payload["question"]
    return _substitute(template, glyphs, slots)


def render_step_blocks(
    maze: Maze,
    moves: Trajectory,
    glyphs: GlyphTable = ASCII_GLYPHS,
    first_step: int = 1,
    start_pos: Coord | None = None,
    allow_invalid: bool = False,
) -> str:
    """Step blocks for a run of moves: description, position line, map.

    With allow_invalid, blocks for invalid moves draw the icon where the bad
    move lands (clamped in-bounds) and flag the violation inline, so rejected
    segments depict the erroneous visualization faithfully. Without it, an
    invalid move raises InvalidTrajectory.
    """
    pos = maze.start if start_pos is None else start_pos
    blocks = []
    for offset, move in enumerate(moves):
        n = first_step + offset
        target = pos.step(move)
        note = ""
        if not maze.in_bounds(target):
            if not allow_invalid:
                raise InvalidTrajectory(f"move {n} exits the grid at {tuple(target)}")
            note = " (invalid: exits the grid)"
        elif target in maze.obstacles:
            if not allow_invalid:
                raise InvalidTrajectory(f"move {n} hits an obstacle at {tuple(target)}")
            note = " (invalid: hits an obstacle)"
        shown = Coord(
            min(max(target.row, 0), maze.height - 1),
            min(max(target.col, 0), maze.width - 1),
        )
        blocks.append(
            f"step{n}: move {move.value} to the next cell{note}\n"
            f"After step{n}: current position: {glyphs.user_icon}\n"
            + render_map(maze, at=shown, glyphs=glyphs)
        )
        pos = target
    return "".join(blocks)


def build_star_session(maze: Maze, traj: Trajectory, glyphs: GlyphTable = ASCII_GLYPHS) -> StarSession:
    """Session object for a valid trajectory; raises InvalidTrajectory otherwise."""
    steps = []
    pos = maze.start
    for move in traj:
        try:
            pos = apply_move(maze, pos, move)
        except InvalidMove as exc:
            raise InvalidTrajectory(str(exc)) from exc
        steps.append(
            StarStep(
                description=f"move {move.value} to the next cell",
                move=move,
                map_after=render_map(maze, at=pos, glyphs=glyphs),
            )
        )
    return StarSession(steps=tuple(steps), summary=traj)


def render_star_session(maze: Maze, traj: Trajectory, glyphs: GlyphTable = ASCII_GLYPHS) -> str:
    """Full chosen-format session text: one block per move plus the summary line."""
    blocks = render_step_blocks(maze, traj, glyphs=glyphs)
    summary = f"Summary of steps: The shortest path is: {direction_list_text(traj)}\n"
    return blocks + summary


def render_next_step_answer(
    maze: Maze,
    prefix: Trajectory,
    answer: Direction,
    glyphs: GlyphTable = ASCII_GLYPHS,
) -> str:
    """Target text for next-step training data: confirm the prefix, then answer."""
    blocks = render_step_blocks(maze, prefix, glyphs=glyphs)
    return (
        blocks
        + "Now that we have confirmed our current position, let's determine the next optimal move.\n"
        + f"Therefore, the direction of next movement is {answer.value}.\n"
    )
