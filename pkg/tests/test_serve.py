"""Engine RPC server: op handling and the stdio loop."""

import io
import json
import subprocess
import sys

from describeworld import ENGINE_VERSION
from describeworld.serve import EngineServer, serve_stdio


def test_hello_reports_versions():
    reply, keep = EngineServer().handle({"op": "hello"})
    assert keep
    assert reply["ok"] and reply["engine_version"] == ENGINE_VERSION


def test_reset_step_state_cycle(graph):
    srv = EngineServer()
    reply, _ = srv.handle({"op": "reset", "task": "reach the jeweler.",
                           "seed": 3})
    assert reply["ok"]
    assert reply["step"] == 0 and not reply["done"]
    assert reply["map"]["agent"]
    assert reply["task_id"]
    obs = reply["observation"]
    assert len(obs) == 8 and len(obs[0]) == 8 and len(obs[0][0]) == 3

    stepped, _ = srv.handle({"op": "step", "action": "up"})
    assert stepped["ok"] and stepped["step"] == 1
    assert stepped["reward"] == -1

    state, _ = srv.handle({"op": "state"})
    assert state["ok"] and state["step"] == 1


def test_reset_with_explicit_map(graph):
    srv = EngineServer()
    first, _ = srv.handle({"op": "reset", "task": "reach the jeweler.",
                           "seed": 3})
    again, _ = srv.handle({"op": "reset", "task": "reach the jeweler.",
                           "map": first["map"]})
    assert again["ok"]
    assert again["map"] == first["map"]


def test_step_before_reset_fails_softly():
    reply, keep = EngineServer().handle({"op": "step", "action": "up"})
    assert keep
    assert not reply["ok"]
    assert reply["error"] == "RuntimeError"


def test_unknown_op_and_bad_action():
    srv = EngineServer()
    reply, keep = srv.handle({"op": "frobnicate"})
    assert keep and not reply["ok"] and reply["error"] == "UnknownOp"
    srv.handle({"op": "reset", "task": "reach the jeweler.", "seed": 0})
    bad, keep = srv.handle({"op": "step", "action": "warp"})
    assert keep and not bad["ok"]


def test_rollout_op_returns_replayable_record(graph):
    srv = EngineServer()
    reply, _ = srv.handle({"op": "rollout", "task": "get stone.", "seed": 1})
    assert reply["ok"]
    rec = reply["record"]
    assert rec["outcome"] == "complete"
    from describeworld.records import replay
    replay(graph, rec)


def test_stdio_loop_and_close():
    lines = [
        json.dumps({"op": "hello"}),
        "not json",
        json.dumps({"op": "close"}),
        json.dumps({"op": "hello"}),  # after close: never read
    ]
    stdin = io.StringIO("\n".join(lines) + "\n")
    stdout = io.StringIO()
    serve_stdio(stdin=stdin, stdout=stdout)
    replies = [json.loads(l) for l in stdout.getvalue().splitlines()]
    assert len(replies) == 3
    assert replies[0]["ok"]
    assert not replies[1]["ok"]
    assert replies[2]["ok"]


def test_serve_subprocess_round_trip():
    proc = subprocess.Popen(
        [sys.executable, "-m", "describeworld.cli", "serve"],
        stdin=subprocess.PIPE, stdout=subprocess.PIPE, text=True)
    try:
        reqs = [{"op": "hello"},
                {"op": "reset", "task": "reach the furnace.", "seed": 2},
                {"op": "step", "action": "down"},
                {"op": "close"}]
        payload = "".join(json.dumps(r) + "\n" for r in reqs)
        out, _ = proc.communicate(payload, timeout=60)
        replies = [json.loads(l) for l in out.splitlines()]
        assert [r["ok"] for r in replies] == [True, True, True, True]
        assert replies[1]["task_id"]
        assert replies[2]["step"] == 1
    finally:
        proc.kill()
