"""Train/test split builders over the task universe.

All five splits assign whole end goals (every constraint variant of a goal
lands on one side), recorded as manifests of stable goal-level ids plus a
validation list holding each train goal's held-out fifth constraint
variant.  Everything is a pure function of (world config, universe), so
manifests are byte-identical across runs.
"""

from __future__ import annotations

import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from math import ceil
from typing import Callable, Optional

from . import ENGINE_VERSION
from .graph import WorldGraph, default_graph
from .hashutil import config_digest, hash_hex, stable_hash64
from .mapgen import default_config, generate_feasible
from .tasks import (
    ConstraintSet,
    EndGoal,
    Task,
    enumerate_end_goals,
    validation_task,
)

HASH_FN = "blake2b-64"
HELD_SUBTASKS = ("place iron flooring", "erect pig shrine", "build diamond house")
PLAIN_ONLY_USES = ("build diamond house", "place road", "make goldware")
DEST_ONLY_USES = ("place iron flooring",)
HELD_TERRAIN = "water"
LENGTH_SEEDS = 5
LENGTH_PCT = 0.10


@dataclass
class SplitManifest:
    name: str
    engine_version: str
    config: str
    universe: str
    hash_fn: str
    params: dict
    train: list[str]
    test: list[str]
    validation: list[str]
    stats: dict = field(default_factory=dict)

    def to_json(self) -> str:
        return json.dumps(self.__dict__, sort_keys=True, ensure_ascii=False,
                          separators=(",", ":")) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "SplitManifest":
        return cls(**json.loads(text))


def goal_key(graph: WorldGraph, goal: EndGoal) -> str:
    """Stable goal-level id: hash of the end-goal sentence."""
    return hash_hex(goal.sentence(graph))


def universe_digest(graph: WorldGraph) -> str:
    return hash_hex("\n".join(goal_key(graph, g) for g in enumerate_end_goals(graph)))


def _manifest(graph: WorldGraph, name: str, params: dict,
              train: list[EndGoal], test: list[EndGoal],
              stats: Optional[dict] = None) -> SplitManifest:
    return SplitManifest(
        name=name,
        engine_version=ENGINE_VERSION,
        config=config_digest(graph.raw),
        universe=universe_digest(graph),
        hash_fn=HASH_FN,
        params=params,
        train=sorted(goal_key(graph, g) for g in train),
        test=sorted(goal_key(graph, g) for g in test),
        validation=sorted(validation_task(graph, g).task_id(graph) for g in train),
        stats=stats or {},
    )


def random_split(graph: Optional[WorldGraph] = None, ratio: float = 0.7) -> SplitManifest:
    graph = graph or default_graph()
    train, test = [], []
    cut = int(ratio * 100)
    for goal in enumerate_end_goals(graph):
        side = train if stable_hash64("split:random:" + goal.sentence(graph)) % 100 < cut else test
        side.append(goal)
    return _manifest(graph, "random", {"ratio": ratio}, train, test)


def _involved(graph: WorldGraph, goal: EndGoal) -> frozenset[str]:
    return goal.involved_subtasks(graph)


def hidden_subtask_split(graph: Optional[WorldGraph] = None) -> SplitManifest:
    """Hold out three subtasks entirely; cover-category goals are dropped."""
    graph = graph or default_graph()
    held = set(HELD_SUBTASKS)
    train, test = [], []
    for goal in enumerate_end_goals(graph):
        if not (_involved(graph, goal) & held):
            train.append(goal)
        elif not goal.has_cover:
            test.append(goal)
    return _manifest(graph, "hidden_subtask", {"held": list(HELD_SUBTASKS)}, train, test)


def _use_allowed(graph: WorldGraph, goal: EndGoal, held: str) -> bool:
    if held in PLAIN_ONLY_USES:
        return (goal.landmark is None and len(goal.atoms) == 1
                and goal.atoms[0].kind == "subtask"
                and goal.atoms[0].subtask == held)
    # destination-only: the subtask may appear through an atom's destination
    # but never as the thing the goal asks for
    return all(atom.subtask != held for atom in goal.atoms)


def hidden_use_case_split(graph: Optional[WorldGraph] = None) -> SplitManifest:
    """Each held subtask stays in train only in one isolated use."""
    graph = graph or default_graph()
    held = set(PLAIN_ONLY_USES) | set(DEST_ONLY_USES)
    train, test = [], []
    for goal in enumerate_end_goals(graph):
        touched = _involved(graph, goal) & held
        if all(_use_allowed(graph, goal, h) for h in touched):
            train.append(goal)
        elif not goal.has_cover:
            test.append(goal)
    return _manifest(
        graph, "hidden_use_case",
        {"plain_only": list(PLAIN_ONLY_USES), "dest_only": list(DEST_ONLY_USES)},
        train, test)


def hidden_terrain_destination_split(graph: Optional[WorldGraph] = None) -> SplitManifest:
    """Goals writing onto water are test; water as a constraint stays train."""
    graph = graph or default_graph()
    train, test = [], []
    for goal in enumerate_end_goals(graph):
        held_out = any(
            (atom.kind == "build_on" and atom.dest == HELD_TERRAIN)
            or (atom.kind == "cover" and atom.target == HELD_TERRAIN)
            for atom in goal.atoms)
        (test if held_out else train).append(goal)
    return _manifest(graph, "hidden_terrain_destination",
                     {"terrain": HELD_TERRAIN}, train, test)


def _goal_statistic(job: tuple[int, int]) -> tuple[int, float]:
    index, seeds = job
    graph = default_graph()
    goal = enumerate_end_goals(graph)[index]
    task = Task(goal=goal, constraints=ConstraintSet.neutral())
    cfg = default_config()
    total = 0
    for seed in range(seeds):
        _, roll = generate_feasible(cfg, task, seed, graph, mode="expert",
                                    return_rollout=True)
        total += roll.steps
    return index, total / seeds


def length_split(graph: Optional[WorldGraph] = None, pct: float = LENGTH_PCT,
                 seeds_per_task: int = LENGTH_SEEDS,
                 workers: Optional[int] = None) -> SplitManifest:
    """Top pct of goals by mean expert rollout length go to test."""
    graph = graph or default_graph()
    goals = enumerate_end_goals(graph)
    jobs = [(i, seeds_per_task) for i in range(len(goals))]
    stats: dict[int, float] = {}
    if workers == 0:
        for job in jobs:
            idx, stat = _goal_statistic(job)
            stats[idx] = stat
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            for idx, stat in pool.map(_goal_statistic, jobs, chunksize=32):
                stats[idx] = stat
    n_test = ceil(pct * len(goals))
    ranked = sorted(range(len(goals)),
                    key=lambda i: (-stats[i], goal_key(graph, goals[i])))
    test_idx = set(ranked[:n_test])
    train = [g for i, g in enumerate(goals) if i not in test_idx]
    test = [g for i, g in enumerate(goals) if i in test_idx]
    stat_map = {goal_key(graph, goals[i]): stats[i] for i in range(len(goals))}
    return _manifest(graph, "length",
                     {"pct": pct, "seeds_per_task": seeds_per_task},
                     train, test, stats=stat_map)


SPLIT_BUILDERS: dict[str, Callable[..., SplitManifest]] = {
    "random": random_split,
    "hidden_subtask": hidden_subtask_split,
    "hidden_use_case": hidden_use_case_split,
    "hidden_terrain_destination": hidden_terrain_destination_split,
    "length": length_split,
}


def build_split(name: str, graph: Optional[WorldGraph] = None, **kwargs) -> SplitManifest:
    try:
        builder = SPLIT_BUILDERS[name]
    except KeyError:
        raise KeyError(f"unknown split {name!r}; choose from {sorted(SPLIT_BUILDERS)}")
    return builder(graph, **kwargs)


def audit_split(manifest: SplitManifest, graph: Optional[WorldGraph] = None) -> list[str]:
    """Exhaustive membership re-check; returns human-readable violations."""
    graph = graph or default_graph()
    problems: list[str] = []
    goals = enumerate_end_goals(graph)
    by_key = {goal_key(graph, g): g for g in goals}
    train, test = set(manifest.train), set(manifest.test)
    if train & test:
        problems.append(f"{len(train & test)} goals on both sides")
    unknown = (train | test) - set(by_key)
    if unknown:
        problems.append(f"{len(unknown)} ids not in the universe")

    if manifest.name == "random":
        frac = len(train) / max(len(goals), 1)
        if abs(frac - manifest.params["ratio"]) > 0.02:
            problems.append(f"train fraction {frac:.4f} outside ratio±0.02")
        if len(train) + len(test) != len(goals):
            problems.append("random split must cover the whole universe")
    elif manifest.name == "hidden_subtask":
        held = set(manifest.params["held"])
        for key, goal in by_key.items():
            touches = bool(_involved(graph, goal) & held)
            if key in train and touches:
                problems.append(f"train leak: {goal.sentence(graph)!r}")
            if key in test and (not touches or goal.has_cover):
                problems.append(f"bad test member: {goal.sentence(graph)!r}")
    elif manifest.name == "hidden_use_case":
        held = set(manifest.params["plain_only"]) | set(manifest.params["dest_only"])
        for key, goal in by_key.items():
            touched = _involved(graph, goal) & held
            ok = all(_use_allowed(graph, goal, h) for h in touched)
            if key in train and not ok:
                problems.append(f"train leak: {goal.sentence(graph)!r}")
            if key in test and (ok or goal.has_cover):
                problems.append(f"bad test member: {goal.sentence(graph)!r}")
    elif manifest.name == "hidden_terrain_destination":
        t = manifest.params["terrain"]
        for key, goal in by_key.items():
            held_out = any((a.kind == "build_on" and a.dest == t)
                           or (a.kind == "cover" and a.target == t)
                           for a in goal.atoms)
            if key in train and held_out:
                problems.append(f"train leak: {goal.sentence(graph)!r}")
            if key in test and not held_out:
                problems.append(f"bad test member: {goal.sentence(graph)!r}")
    elif manifest.name == "length":
        stats = manifest.stats
        if test and train:
            min_test = min(stats[k] for k in test)
            max_train = max(stats[k] for k in train)
            if min_test < max_train:
                problems.append(
                    f"length overlap: min test {min_test} < max train {max_train}")
        want = ceil(manifest.params["pct"] * len(goals))
        if len(test) != want:
            problems.append(f"test size {len(test)} != {want}")
    return problems
