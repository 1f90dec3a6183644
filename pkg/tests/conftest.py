"""Shared fixtures: hand-built mazes and local stub endpoints."""

from __future__ import annotations

import json
import threading
from dataclasses import replace
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

import pytest

from mazekit.generate import annotate_turnpoints
from mazekit.grid import Coord, Maze
from mazekit.solve import shortest_path


def finished_maze(width, height, obstacles, start, dest, tier=0, seed=0) -> Maze:
    """Maze with the canonical path and turn points filled in."""
    maze = Maze(
        width=width,
        height=height,
        obstacles=frozenset(Coord(*c) for c in obstacles),
        start=Coord(*start),
        destination=Coord(*dest),
        tier=tier,
        seed=seed,
    )
    maze = replace(maze, optimal_path=shortest_path(maze).path)
    return replace(maze, turn_points=tuple(annotate_turnpoints(maze)))


@pytest.fixture
def empty_3x3() -> Maze:
    return finished_maze(3, 3, [], (0, 0), (2, 2))


@pytest.fixture
def corridor_1x4() -> Maze:
    return finished_maze(4, 1, [], (0, 0), (0, 3))


@pytest.fixture
def l_maze() -> Maze:
    # L-shaped free corridor in a 3x3: down, down, right, right
    return finished_maze(3, 3, [(0, 1), (0, 2), (1, 1), (1, 2)], (0, 0), (2, 2))


class StubEndpoint:
    """Local chat-completions stub; `reply` maps a prompt to the response text.

    Tracks request count and the maximum number of concurrently active
    handlers. A `fail_after` threshold turns later requests into HTTP 500s
    (for interruption/resume tests).
    """

    def __init__(self, reply, fail_after: int | None = None, logprob_fn=None):
        self.reply = reply
        self.fail_after = fail_after
        self.logprob_fn = logprob_fn
        self.requests = 0
        self.active = 0
        self.max_active = 0
        self._lock = threading.Lock()
        stub = self

        class Handler(BaseHTTPRequestHandler):
            def log_message(self, *args):  # keep test output clean
                pass

            def do_POST(self):
                with stub._lock:
                    stub.requests += 1
                    stub.active += 1
                    stub.max_active = max(stub.max_active, stub.active)
                    order = stub.requests
                try:
                    body = json.loads(self.rfile.read(int(self.headers["Content-Length"])))
                    if stub.fail_after is not None and order > stub.fail_after:
                        self.send_response(500)
                        self.send_header("Content-Length", "0")
                        self.end_headers()
                        return
                    if "prompt" in body and body.get("echo"):
                        doc = stub._logprob_body(body["prompt"])
                    else:
                        prompt = body["messages"][0]["content"]
                        doc = {"choices": [{"message": {"content": stub.reply(prompt)}}]}
                    out = json.dumps(doc).encode()
                    self.send_response(200)
                    self.send_header("Content-Type", "application/json")
                    self.send_header("Content-Length", str(len(out)))
                    self.end_headers()
                    self.wfile.write(out)
                finally:
                    with stub._lock:
                        stub.active -= 1

        self.server = ThreadingHTTPServer(("127.0.0.1", 0), Handler)
        self.thread = threading.Thread(target=self.server.serve_forever, daemon=True)
        self.thread.start()

    def _logprob_body(self, prompt: str) -> dict:
        fn = self.logprob_fn or (lambda ch: -0.01)
        return {
            "choices": [
                {
                    "logprobs": {
                        "text_offset": list(range(len(prompt))),
                        "token_logprobs": [fn(ch) for ch in prompt],
                    }
                }
            ]
        }

    @property
    def url(self) -> str:
        return f"http://127.0.0.1:{self.server.server_port}"

    def close(self):
        self.server.shutdown()
        self.server.server_close()


@pytest.fixture
def make_stub():
    stubs = []

    def factory(reply, **kwargs) -> StubEndpoint:
        stub = StubEndpoint(reply, **kwargs)
        stubs.append(stub)
        return stub

    yield factory
    for stub in stubs:
        stub.close()
