"""Extraction of answers from free-text model responses.

Policy: final answers come last in chain-of-thought output, so every
extractor takes the LAST plausible match. Unparseable responses are data
(scored as wrong), never crashes; parsers must survive arbitrary input.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from .grid import Coord, Direction, Maze, Trajectory, trajectory_from_words
from .prompts import ASCII_GLYPHS, GlyphTable, StarSession, StarStep, render_map


class UnparseableResponse(Exception):
    """No extractable answer in the text."""


class InvalidListToken(Exception):
    """A bracketed list contained a non-direction word."""

    def __init__(self, token: str):
        self.token = token
        super().__init__(f"not a direction: {token!r}")


@dataclass
class ParsedResponse:
    kind: str  # direction_list | choice | star_session | unparseable
    trajectory: Trajectory | None = None
    choice: str | None = None
    session: StarSession | None = None
    diagnostics: list[str] = field(default_factory=list)


@dataclass(frozen=True)
class Violation:
    step_index: int
    kind: str  # logical_inconsistency | constraint_violation | structural_corruption


@dataclass
class ConsistencyReport:
    violations: list[Violation] = field(default_factory=list)

    def kinds(self) -> set[str]:
        return {v.kind for v in self.violations}


_BRACKET_RE = re.compile(r"\[([^\[\]]*)\]")
_WORD_RE = re.compile(r"^[A-Za-z]+$")
_DIRECTION_WORDS = {d.value for d in Direction}


def _list_candidates(text: str) -> list[list[str]]:
    """Bracketed spans that look like word lists (quotes optional, may be empty)."""
    candidates = []
    for m in _BRACKET_RE.finditer(text):
        content = m.group(1).strip()
        if not content:
            candidates.append([])
            continue
        items = []
        ok = True
        for raw in content.split(","):
            token = raw.strip().strip("\"'").strip()
            if not _WORD_RE.match(token):
                ok = False
                break
            items.append(token)
        if ok:
            candidates.append(items)
    return candidates


def parse_direction_list(text: str) -> Trajectory:
    """Trajectory from the last bracketed word list in the text.

    Raises UnparseableResponse when no such list exists and InvalidListToken
    when the last list contains a non-direction word.
    """
    candidates = _list_candidates(text or "")
    if not candidates:
        raise UnparseableResponse("no bracketed direction list")
    last = candidates[-1]
    for token in last:
        if token.lower() not in _DIRECTION_WORDS:
            raise InvalidListToken(token)
    return trajectory_from_words(last)


_CHOICE_PHRASE_RE = re.compile(
    r"\b(?:answer|option|choice|direction)\b(?:\s+\w+){0,2}?\s*(?:is|:)?\s*\(?([A-Da-d])\)?(?![A-Za-z])",
    re.IGNORECASE,
)
_CHOICE_PAREN_RE = re.compile(r"\(\s*([A-Da-d])\s*\)")
_CHOICE_BARE_RE = re.compile(r"(?<![A-Za-z])([A-Da-d])(?![A-Za-z])")


def parse_choice(text: str) -> str:
    """Final standalone option letter, normalized to upper case."""
    text = text or ""
    for pattern in (_CHOICE_PHRASE_RE, _CHOICE_PAREN_RE, _CHOICE_BARE_RE):
        matches = pattern.findall(text)
        if matches:
            return matches[-1].upper()
    raise UnparseableResponse("no option letter")


# A bare verdict only: "no" in "no answer" is a refusal, not an answer.
_YES_NO_RE = re.compile(r"\b(yes|no|true|false)\b(?!\s+\w)", re.IGNORECASE)
_INT_RE = re.compile(r"(?<![\w.])-?\d+(?![\w.])")


def parse_yes_no(text: str) -> str:
    """Last yes/no token (true/false accepted as synonyms); 'yes' or 'no'."""
    matches = _YES_NO_RE.findall(text or "")
    if not matches:
        raise UnparseableResponse("no yes/no answer")
    return "yes" if matches[-1].lower() in ("yes", "true") else "no"


def parse_true_false(text: str) -> bool:
    matches = _YES_NO_RE.findall(text or "")
    if not matches:
        raise UnparseableResponse("no true/false answer")
    return matches[-1].lower() in ("true", "yes")


def parse_integer(text: str) -> int:
    matches = _INT_RE.findall(text or "")
    if not matches:
        raise UnparseableResponse("no integer answer")
    return int(matches[-1])


_STEP_RE = re.compile(r"^step\s*(\d+)\s*:\s*(.*)$", re.IGNORECASE)
_MOVE_WORD_RE = re.compile(r"\b(up|down|left|right)\b", re.IGNORECASE)


def _grid_line_tokens(line: str, vocabulary: set[str]) -> list[str] | None:
    tokens = line.split()
    if tokens and all(t in vocabulary for t in tokens):
        return tokens
    return None


def parse_star_session(text: str, glyphs: GlyphTable = ASCII_GLYPHS) -> tuple[StarSession, list[str]]:
    """Recover a step-block session from text; returns (session, diagnostics).

    Tolerates missing maps and missing summary (noted in diagnostics);
    raises UnparseableResponse only when neither step markers nor a summary
    list exist.
    """
    lines = (text or "").splitlines()
    vocab = glyphs.vocabulary()
    steps: list[StarStep] = []
    diagnostics: list[str] = []
    i = 0
    while i < len(lines):
        m = _STEP_RE.match(lines[i].strip())
        if not m:
            i += 1
            continue
        description = m.group(2).strip()
        move_match = _MOVE_WORD_RE.search(description)
        # the map block is any run of grid-looking lines before the next step marker
        j = i + 1
        grid_lines: list[str] = []
        while j < len(lines) and not _STEP_RE.match(lines[j].strip()):
            tokens = _grid_line_tokens(lines[j].strip(), vocab)
            if tokens is not None:
                grid_lines.append(lines[j].strip())
            elif grid_lines:
                break  # grid block ended
            j += 1
        if move_match is None:
            diagnostics.append(f"step {m.group(1)}: no direction word; step dropped")
        else:
            steps.append(
                StarStep(
                    description=description,
                    move=Direction(move_match.group(1).lower()),
                    map_after="\n".join(grid_lines) + "\n" if grid_lines else None,
                )
            )
            if not grid_lines:
                diagnostics.append(f"step {m.group(1)}: missing map")
        i = j if j > i + 1 else i + 1

    summary: Trajectory | None = None
    try:
        summary = parse_direction_list(text)
    except (UnparseableResponse, InvalidListToken):
        diagnostics.append("no summary list")
    if not steps and summary is None:
        raise UnparseableResponse("no step markers and no summary list")
    moves = tuple(s.move for s in steps)
    if summary is not None and steps and summary != moves:
        diagnostics.append("summary disagrees with step moves")
    return StarSession(steps=tuple(steps), summary=summary if summary is not None else moves), diagnostics


def parse_response(kind: str, text: str, glyphs: GlyphTable = ASCII_GLYPHS) -> ParsedResponse:
    """Never-raising front-end used by the CLI and the scoring pipeline."""
    try:
        if kind == "route":
            return ParsedResponse(kind="direction_list", trajectory=parse_direction_list(text))
        if kind == "choice":
            return ParsedResponse(kind="choice", choice=parse_choice(text))
        if kind == "star":
            session, diagnostics = parse_star_session(text, glyphs)
            return ParsedResponse(
                kind="star_session",
                session=session,
                trajectory=session.summary,
                diagnostics=diagnostics,
            )
        raise ValueError(f"unknown parse kind {kind!r}")
    except (UnparseableResponse, InvalidListToken) as exc:
        return ParsedResponse(kind="unparseable", diagnostics=[str(exc)])


def extract_answer(instance, text: str):
    """Family-appropriate parsed answer for scoring, or None when unparseable.

    Route planning yields a Trajectory; next-step a letter; turnpoint a
    yes/no string or an integer depending on the payload template; rule a
    boolean.
    """
    try:
        if instance.family == "route_planning":
            return parse_direction_list(text)
        if instance.family == "next_step":
            return parse_choice(text)
        if instance.family == "turnpoint":
            if instance.payload.get("template") == "count":
                return parse_integer(text)
            return parse_yes_no(text)
        if instance.family == "rule":
            return parse_true_false(text)
    except (UnparseableResponse, InvalidListToken):
        return None
    raise ValueError(f"unknown family {instance.family!r}")


def _parse_grid(map_text: str) -> list[list[str]]:
    return [line.split() for line in map_text.strip("\n").splitlines()]


def check_consistency(maze: Maze, session: StarSession, glyphs: GlyphTable = ASCII_GLYPHS) -> ConsistencyReport:
    """Audit a session's step blocks against the maze's ground truth.

    Per step: logical_inconsistency when the drawn icon is not where the
    declared moves put it; constraint_violation when the declared move
    crosses an obstacle or the boundary; structural_corruption when the map
    dimensions or the static glyphs (obstacles, start, destination) differ
    from the maze's own rendering. Violations are data, not errors.
    """
    report = ConsistencyReport()
    expected_grid = _parse_grid(render_map(maze, glyphs=glyphs))
    static = {glyphs.obstacle, glyphs.start, glyphs.destination}
    pos = maze.start
    for idx, step in enumerate(session.steps):
        target = pos.step(step.move)
        if not maze.in_bounds(target) or target in maze.obstacles:
            report.violations.append(Violation(idx, "constraint_violation"))
        if step.map_after is not None:
            grid = _parse_grid(step.map_after)
            if len(grid) != maze.height or any(len(row) != maze.width for row in grid):
                report.violations.append(Violation(idx, "structural_corruption"))
            else:
                icons = [
                    Coord(r, c)
                    for r in range(maze.height)
                    for c in range(maze.width)
                    if grid[r][c] == glyphs.user_icon
                ]
                if len(icons) != 1 or icons[0] != target:
                    report.violations.append(Violation(idx, "logical_inconsistency"))
                corrupted = False
                for r in range(maze.height):
                    for c in range(maze.width):
                        if Coord(r, c) in icons:
                            continue
                        seen, want = grid[r][c], expected_grid[r][c]
                        if seen != want and (seen in static or want in static):
                            corrupted = True
                if corrupted:
                    report.violations.append(Violation(idx, "structural_corruption"))
        pos = target  # models that break constraints keep "moving" from where they claim
    return report
