"""Engine request server: line-delimited JSON RPC over stdio.

One episode is live at a time. Requests are objects with an "op" field;
every reply carries "ok". Unknown ops and mid-episode errors answer
ok=false without killing the server, so a client can recover.

Ops: hello, reset (task text + seed, or an explicit map), step, state,
rollout (full expert record in one call), close.
"""

from __future__ import annotations

import json
import sys
from typing import Optional, TextIO

from . import ENGINE_VERSION
from .errors import ParseError
from .graph import default_graph
from .grid import GridMap
from .lang import parse_description
from .mapgen import MapGenConfig, generate_feasible
from .oracle import rollout
from .protocol import PROTOCOL_VERSION, encode
from .records import record_from_rollout
from .tasks import task_by_id
from .world import Episode


def _resolve_task(graph, text: str):
    """Accept either canonical task text or a 16-hex task id."""
    try:
        return parse_description(graph, text)
    except ParseError:
        if len(text) == 16 and all(ch in "0123456789abcdef" for ch in text):
            return task_by_id(graph, text)
        raise


class EngineServer:
    def __init__(self, engine_config: Optional[dict] = None,
                 mapgen: Optional[MapGenConfig] = None):
        self.graph = default_graph()
        self.engine_config = engine_config
        self.mapgen = mapgen or MapGenConfig()
        self.episode: Optional[Episode] = None

    # each handler returns the reply body (without "ok")

    def op_hello(self, req: dict) -> dict:
        return {"engine_version": ENGINE_VERSION,
                "protocol_version": PROTOCOL_VERSION}

    def _obs_body(self, reward: int = 0, completed: Optional[str] = None,
                  events: Optional[list] = None) -> dict:
        ep = self.episode
        return {
            "observation": ep.map.observation(self.graph).tolist(),
            "inventory": ep.inventory_text(),
            "reward": reward,
            "step": ep.steps,
            "done": ep.done,
            "outcome": ep.outcome,
            "completed": completed,
            "events": events or [],
        }

    def op_reset(self, req: dict) -> dict:
        task = _resolve_task(self.graph, req["task"])
        if "map" in req:
            m = GridMap.from_dict(req["map"])
        else:
            m = generate_feasible(self.mapgen, task, int(req["seed"]),
                                  self.graph, mode=req.get("mode", "expert"))
        self.episode = Episode(task, m, self.graph, self.engine_config)
        body = self._obs_body()
        body["map"] = m.to_dict()
        body["task_id"] = task.task_id(self.graph)
        return body

    def op_step(self, req: dict) -> dict:
        if self.episode is None:
            raise RuntimeError("no live episode; reset first")
        tr = self.episode.step(req["action"])
        return self._obs_body(reward=tr.reward, completed=tr.completed,
                              events=[list(e) for e in tr.events])

    def op_state(self, req: dict) -> dict:
        if self.episode is None:
            raise RuntimeError("no live episode; reset first")
        return self._obs_body()

    def op_rollout(self, req: dict) -> dict:
        task = _resolve_task(self.graph, req["task"])
        if "map" in req:
            m = GridMap.from_dict(req["map"])
            roll = rollout(self.graph, task, m, mode=req.get("mode", "expert"),
                           config=self.engine_config)
        else:
            _, roll = generate_feasible(self.mapgen, task, int(req["seed"]),
                                        self.graph, mode=req.get("mode", "expert"),
                                        return_rollout=True)
        return {"record": record_from_rollout(self.graph, roll)}

    def handle(self, req: dict) -> tuple[dict, bool]:
        """Reply body and whether to keep serving."""
        op = req.get("op")
        if op == "close":
            return {"ok": True}, False
        handler = getattr(self, f"op_{op}", None)
        if handler is None:
            return {"ok": False, "error": "UnknownOp",
                    "message": f"unknown op {op!r}"}, True
        try:
            body = handler(req)
        except Exception as exc:
            return {"ok": False, "error": type(exc).__name__,
                    "message": str(exc)}, True
        return {"ok": True, **body}, True


def serve_stdio(engine_config: Optional[dict] = None,
                mapgen: Optional[MapGenConfig] = None,
                stdin: Optional[TextIO] = None,
                stdout: Optional[TextIO] = None) -> None:
    server = EngineServer(engine_config, mapgen)
    fin = stdin or sys.stdin
    fout = stdout or sys.stdout
    for line in fin:
        if not line.strip():
            continue
        try:
            req = json.loads(line)
            if not isinstance(req, dict):
                raise ValueError("request must be a JSON object")
        except Exception as exc:
            fout.write(encode({"ok": False, "error": type(exc).__name__,
                               "message": str(exc)}))
            fout.flush()
            continue
        reply, keep = server.handle(req)
        fout.write(encode(reply))
        fout.flush()
        if not keep:
            return
