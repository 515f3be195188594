"""Line-delimited JSON wire protocol for external agents and env serving.

One JSON object per line over stdio.  An evaluation exchange looks like:

    harness -> agent   {"type": "hello", "protocol": 1, "scenario": ...,
                        "payload": {...}, "engine_version": ..., "config": ...}
    agent -> harness   {"type": "ready", "name": "..."}
    harness -> agent   {"type": "obs", "step": 0, "observation": [[[...]]],
                        "inventory": "...", "reward": 0, "instruction": null}
    agent -> harness   {"type": "act", "action": "up"}
                       (or {"type": "predict", "description"/"instruction": ...},
                        answered by the next obs without stepping)
    ...
    harness -> agent   {"type": "end", "outcome": "complete", "steps": 42,
                        "reward": -17}

After "end" the harness may start the next episode with a fresh "hello" or
close the stream.  The engine's serve mode (reset/step/expert/rollout) uses
the same framing; see the README for the full schema.
"""

from __future__ import annotations

import json
import selectors
import subprocess
import sys
import time
from typing import Any, Optional

from .errors import ProtocolError

PROTOCOL_VERSION = 1


def encode(msg: dict) -> str:
    return json.dumps(msg, ensure_ascii=False, separators=(",", ":")) + "\n"


def decode(line: str) -> dict:
    try:
        msg = json.loads(line)
    except json.JSONDecodeError as exc:
        raise ProtocolError(f"bad message line: {exc}") from None
    if not isinstance(msg, dict) or "type" not in msg:
        raise ProtocolError("message must be an object with a 'type' field")
    return msg


class AgentProcess:
    """A subprocess agent endpoint with per-message read deadlines."""

    def __init__(self, cmd: list[str], timeout: float = 5.0):
        self.cmd = cmd
        self.timeout = timeout
        self.proc: Optional[subprocess.Popen] = None
        self._sel: Optional[selectors.BaseSelector] = None
        self._buf = b""

    def start(self) -> None:
        self.proc = subprocess.Popen(
            self.cmd, stdin=subprocess.PIPE, stdout=subprocess.PIPE,
            stderr=subprocess.DEVNULL, bufsize=0)
        self._sel = selectors.DefaultSelector()
        self._sel.register(self.proc.stdout, selectors.EVENT_READ)
        self._buf = b""

    @property
    def alive(self) -> bool:
        return self.proc is not None and self.proc.poll() is None

    def send(self, msg: dict) -> None:
        if not self.alive:
            raise ProtocolError("agent process is not running")
        try:
            self.proc.stdin.write(encode(msg).encode("utf-8"))
            self.proc.stdin.flush()
        except (BrokenPipeError, OSError) as exc:
            raise ProtocolError(f"agent pipe closed: {exc}") from None

    def recv(self, timeout: Optional[float] = None) -> dict:
        deadline = time.monotonic() + (self.timeout if timeout is None else timeout)
        while b"\n" not in self._buf:
            remain = deadline - time.monotonic()
            if remain <= 0:
                raise ProtocolError("agent reply timed out")
            if not self._sel.select(remain):
                continue
            chunk = self.proc.stdout.read(65536)
            if not chunk:
                raise ProtocolError("agent closed its output stream")
            self._buf += chunk
        line, self._buf = self._buf.split(b"\n", 1)
        return decode(line.decode("utf-8"))

    def close(self) -> None:
        if self.proc is None:
            return
        if self._sel is not None:
            self._sel.close()
            self._sel = None
        if self.alive:
            try:
                self.proc.stdin.close()
            except OSError:
                pass
            try:
                self.proc.wait(timeout=2.0)
            except subprocess.TimeoutExpired:
                self.proc.kill()
                self.proc.wait()
        self.proc = None

    def __enter__(self) -> "AgentProcess":
        self.start()
        return self

    def __exit__(self, *exc) -> None:
        self.close()


class StdioBridge:
    """Agent-side helper: read harness messages from stdin, answer on stdout."""

    def __init__(self, stdin=None, stdout=None):
        self.stdin = stdin or sys.stdin
        self.stdout = stdout or sys.stdout

    def recv(self) -> Optional[dict]:
        line = self.stdin.readline()
        if not line:
            return None
        return decode(line)

    def send(self, msg: dict) -> None:
        self.stdout.write(encode(msg))
        self.stdout.flush()
