"""Engine client: reset/step/rollout over the line-delimited JSON protocol.

An EnvHandle owns one engine subprocess and at most one live episode.
All world state lives on the engine side; this side only shuttles
requests and decodes replies, so observations, rewards, and termination
are whatever the engine produced, bit for bit. Handles are independent
of each other and must not be shared across threads.
"""

from __future__ import annotations

import json
import subprocess
import sys
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

PROTOCOL_VERSION = 1

# presentation label used in step() info; the raw engine string is kept
# alongside so parity checks can compare verbatim
_OUTCOME_LABELS = {"complete": "goal_complete"}


class EngineError(RuntimeError):
    """The engine answered ok=false (unknown task, illegal action, ...)."""

    def __init__(self, error: str, message: str):
        super().__init__(f"{error}: {message}")
        self.error = error
        self.message = message


class EngineUnavailableError(RuntimeError):
    """The engine process could not be started or died mid-conversation."""


@dataclass(frozen=True, eq=False)
class Observation:
    """One engine observation: (h, w, 3) int32 grid plus inventory text.

    Channel 0 is the agent one-hot, channel 1 object ids, channel 2
    terrain ids.
    """

    array: np.ndarray
    inventory: str


def _default_command() -> list[str]:
    return [sys.executable, "-m", "describeworld", "serve"]


class EnvHandle:
    """One engine subprocess, one live episode at a time."""

    def __init__(self, command: Optional[Sequence[str]] = None,
                 config_path: Optional[str] = None):
        cmd = list(command) if command is not None else _default_command()
        if config_path is not None:
            cmd += ["--config", config_path]
        try:
            self._proc = subprocess.Popen(
                cmd, stdin=subprocess.PIPE, stdout=subprocess.PIPE,
                text=True, bufsize=1)
        except OSError as exc:
            raise EngineUnavailableError(f"cannot start engine: {exc}") from None
        hello = self._call({"op": "hello"})
        if hello.get("protocol_version") != PROTOCOL_VERSION:
            self.close()
            raise EngineUnavailableError(
                f"protocol version {hello.get('protocol_version')!r}, "
                f"expected {PROTOCOL_VERSION}")
        self.engine_version: Optional[str] = hello.get("engine_version")
        self.task: Optional[str] = None
        self.task_id: Optional[str] = None
        self.seed: Optional[int] = None
        self.mode: Optional[str] = None
        self.done: bool = False
        self.outcome: Optional[str] = None
        self.last_map: Optional[dict] = None

    # -- wire ------------------------------------------------------------------

    def _call(self, req: dict) -> dict:
        proc = self._proc
        if proc.poll() is not None:
            raise EngineUnavailableError("engine process has exited")
        try:
            proc.stdin.write(json.dumps(req, separators=(",", ":")) + "\n")
            proc.stdin.flush()
            line = proc.stdout.readline()
        except (BrokenPipeError, OSError, ValueError) as exc:
            raise EngineUnavailableError(str(exc)) from None
        if not line:
            raise EngineUnavailableError("engine closed the connection")
        reply = json.loads(line)
        if not reply.get("ok"):
            raise EngineError(reply.get("error", "Error"),
                              reply.get("message", ""))
        return reply

    @staticmethod
    def _obs(reply: dict) -> Observation:
        return Observation(
            array=np.asarray(reply["observation"], dtype=np.int32),
            inventory=reply["inventory"])

    # -- episode surface ---------------------------------------------------------

    def reset(self, task: str, seed: Optional[int] = None, *,
              map: Optional[dict] = None,
              mode: str = "expert") -> Observation:
        """Start a fresh episode and return its initial observation.

        `task` is canonical task text or a 16-hex task id. With `map`
        the episode runs on that exact grid; otherwise the engine
        generates a feasible map from `seed`.
        """
        req: dict = {"op": "reset", "task": task, "mode": mode}
        if map is not None:
            req["map"] = map
        else:
            req["seed"] = 0 if seed is None else int(seed)
        reply = self._call(req)
        self.task = task
        self.task_id = reply.get("task_id")
        self.seed = seed
        self.mode = mode
        self.done = bool(reply.get("done"))
        self.outcome = reply.get("outcome")
        self.last_map = reply.get("map")
        return self._obs(reply)

    def step(self, action: str) -> tuple[Observation, int, bool, dict]:
        """Apply one action; returns (observation, reward, done, info).

        info carries the reward-event breakdown ("events"), the phrase of
        any subtask completed this step ("completed"), the step counter,
        and the outcome both as a label ("outcome": goal_complete,
        timeout, unattainable) and verbatim ("outcome_raw").
        """
        reply = self._call({"op": "step", "action": action})
        self.done = bool(reply["done"])
        self.outcome = reply.get("outcome")
        raw = reply.get("outcome")
        info = {
            "events": [tuple(e) for e in reply.get("events", [])],
            "completed": reply.get("completed"),
            "step": reply["step"],
            "outcome": _OUTCOME_LABELS.get(raw, raw),
            "outcome_raw": raw,
        }
        return self._obs(reply), int(reply["reward"]), self.done, info

    def state(self) -> Observation:
        """Re-read the current observation without acting."""
        return self._obs(self._call({"op": "state"}))

    def rollout(self, task: str, seed: Optional[int] = None, *,
                map: Optional[dict] = None, mode: str = "expert") -> dict:
        """Run a full oracle episode engine-side; returns the episode record."""
        req: dict = {"op": "rollout", "task": task, "mode": mode}
        if map is not None:
            req["map"] = map
        else:
            req["seed"] = 0 if seed is None else int(seed)
        return self._call(req)["record"]

    # -- lifecycle -----------------------------------------------------------------

    def close(self) -> None:
        proc = getattr(self, "_proc", None)
        if proc is None or proc.poll() is not None:
            return
        try:
            proc.stdin.write('{"op":"close"}\n')
            proc.stdin.flush()
            proc.stdin.close()
            proc.wait(timeout=5)
        except Exception:
            proc.kill()
            proc.wait()

    def __enter__(self) -> "EnvHandle":
        return self

    def __exit__(self, *exc) -> None:
        self.close()

    def __del__(self):
        try:
            self.close()
        except Exception:
            pass
