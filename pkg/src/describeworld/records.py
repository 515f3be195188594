"""Episode record files: export, streaming reads, and replay verification.

A dataset file is line-delimited JSON: a header object first, then one
record per line.  Records carry the initial map plus per-step
(action, reward, inventory) entries; full before/after grids are
reconstructable by replay, which is also the integrity check.
"""

from __future__ import annotations

import json
from typing import Iterable, Iterator, Optional, TextIO, Union

from . import ENGINE_VERSION
from .errors import InfeasibleMapError, ReplayError
from .graph import WorldGraph, default_graph
from .grid import GridMap
from .hashutil import config_digest, derive_seed
from .lang import describe_task, parse_description
from .mapgen import MapGenConfig, default_config, generate_feasible
from .oracle import Rollout
from .world import Episode

SCHEMA_VERSION = 1


def dataset_header(graph: WorldGraph, kind: str = "episodes") -> dict:
    return {
        "schema": SCHEMA_VERSION,
        "kind": kind,
        "engine_version": ENGINE_VERSION,
        "config": config_digest(graph.raw),
    }


def record_from_rollout(graph: WorldGraph, roll: Rollout) -> dict:
    """One serializable episode record, replayable and self-describing."""
    task = roll.task
    ep = roll.episode
    return {
        "task": task.text(graph),
        "task_id": task.task_id(graph),
        "goal_id": task.goal_id(graph),
        "mode": roll.mode,
        "map_seed": roll.initial_map.seed,
        "map": roll.initial_map.to_dict(),
        "outcome": roll.outcome,
        "length": len(ep.transitions),
        "total_reward": ep.total_reward,
        "description": describe_task(graph, task),
        "instructions": roll.instructions(),
        "phrases": roll.phrases(),
        "transitions": [
            {"action": tr.action, "reward": tr.reward, "inventory": tr.inventory,
             "completed": tr.completed}
            for tr in ep.transitions
        ],
    }


def replay(graph: WorldGraph, record: dict) -> Episode:
    """Re-run the recorded actions; raise ReplayError on the first divergence."""
    task = parse_description(graph, record["task"])
    m = GridMap.from_dict(record["map"])
    ep = Episode(task, m, graph)
    for i, step in enumerate(record["transitions"]):
        if ep.done:
            raise ReplayError(f"episode ended early before step {i}")
        tr = ep.step(step["action"])
        if tr.reward != step["reward"]:
            raise ReplayError(
                f"reward diverged at step {i}: {tr.reward} != {step['reward']}")
        if tr.inventory != step["inventory"]:
            raise ReplayError(f"inventory diverged at step {i}")
        if tr.completed != step.get("completed"):
            raise ReplayError(f"completion diverged at step {i}")
    if (ep.outcome or "running") != record["outcome"]:
        raise ReplayError(
            f"outcome diverged: {ep.outcome!r} != {record['outcome']!r}")
    return ep


def write_dataset(path: str, graph: WorldGraph, records: Iterable[dict],
                  kind: str = "episodes") -> int:
    n = 0
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(json.dumps(dataset_header(graph, kind), sort_keys=True,
                            ensure_ascii=False, separators=(",", ":")) + "\n")
        for rec in records:
            fh.write(json.dumps(rec, sort_keys=True, ensure_ascii=False,
                                separators=(",", ":")) + "\n")
            n += 1
    return n


def read_dataset(source: Union[str, TextIO],
                 expect_kind: Optional[str] = None) -> Iterator[dict]:
    """Yield records after validating the header line."""
    fh = open(source, "r", encoding="utf-8") if isinstance(source, str) else source
    try:
        header_line = fh.readline()
        if not header_line:
            raise ReplayError("empty dataset file")
        header = json.loads(header_line)
        if header.get("schema") != SCHEMA_VERSION:
            raise ReplayError(f"unsupported schema {header.get('schema')!r}")
        if expect_kind is not None and header.get("kind") != expect_kind:
            raise ReplayError(f"expected kind {expect_kind!r}, got {header.get('kind')!r}")
        for line in fh:
            if line.strip():
                yield json.loads(line)
    finally:
        if isinstance(source, str):
            fh.close()


def export_dataset(graph: WorldGraph, tasks, n_demos_per_task: int, seed: int,
                   path: str, mode: str = "demonstration",
                   config: Optional[MapGenConfig] = None) -> dict:
    """One record per (task, demo index); infeasible tasks are skipped."""
    graph = graph or default_graph()
    cfg = config or default_config()
    skipped: list[str] = []

    def _records() -> Iterator[dict]:
        for task in tasks:
            for demo in range(n_demos_per_task):
                try:
                    _, roll = generate_feasible(
                        cfg, task, derive_seed("dataset", str(seed), str(demo)),
                        graph, mode=mode, return_rollout=True)
                except InfeasibleMapError as exc:
                    skipped.append(str(exc))
                    continue
                yield record_from_rollout(graph, roll)

    written = write_dataset(path, graph, _records())
    return {"written": written, "skipped": skipped}
