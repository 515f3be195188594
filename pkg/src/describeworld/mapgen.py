"""Seeded map generation with feasibility rejection sampling.

Maps are drawn from a fixed recipe (terrain blobs, one landmark of each
kind, per-object count ranges, object-free spawn) and then filtered:
``feasible_for`` checks that the oracle can actually finish the task, and
``generate_feasible`` additionally rejects maps whose demonstrations would
be uninformative (a demo must pin the task down uniquely for an observer).
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field, replace
from typing import Mapping, Optional

from .errors import InfeasibleMapError, OracleStuck
from .graph import WorldGraph, default_graph
from .grid import Cell, GridMap
from .hashutil import derive_seed
from .oracle import Rollout, rollout
from .tasks import Task, goal_attainable

DEFAULT_COUNTS: dict[str, tuple[int, int]] = {
    "tree": (2, 3),
    "stone": (1, 2),
    "spade": (1, 1),
    "coal": (0, 2),
    "iron ore": (1, 2),
    "silver ore": (1, 2),
    "gold ore": (1, 2),
    "diamond ore": (1, 2),
    "grass": (2, 3),
    "chicken": (1, 1),
    "pig": (1, 1),
}

_DIRS = ((-1, 0), (1, 0), (0, -1), (0, 1))


@dataclass(frozen=True)
class MapGenConfig:
    height: int = 8
    width: int = 8
    terrain_presence: float = 0.85   # chance each natural terrain appears at all
    patch_range: tuple[int, int] = (1, 2)
    blob_range: tuple[int, int] = (1, 6)
    counts: Mapping[str, tuple[int, int]] = field(
        default_factory=lambda: dict(DEFAULT_COUNTS))
    feasibility_attempts: int = 64


def default_config() -> MapGenConfig:
    return MapGenConfig()


@dataclass
class FeasibilityReport:
    feasible: bool
    reason: str = ""
    rollout: Optional[Rollout] = None


def _blob(rng: random.Random, height: int, width: int,
          blob_range: tuple[int, int]) -> set[Cell]:
    r = rng.randrange(height)
    c = rng.randrange(width)
    cells = {(r, c)}
    for _ in range(rng.randint(*blob_range) - 1):
        dr, dc = rng.choice(_DIRS)
        r = min(max(r + dr, 0), height - 1)
        c = min(max(c + dc, 0), width - 1)
        cells.add((r, c))
    return cells


def generate(config: MapGenConfig, seed: int,
             graph: Optional[WorldGraph] = None) -> GridMap:
    """One map, deterministic in (config, seed)."""
    graph = graph or default_graph()
    rng = random.Random(seed)
    m = GridMap.empty(config.height, config.width)
    m.seed = seed

    for terrain in graph.natural_terrains:
        present = rng.random() < config.terrain_presence
        for _ in range(rng.randint(*config.patch_range)):
            blob = _blob(rng, config.height, config.width, config.blob_range)
            if not present:
                continue
            for cell in blob:
                if m.terrain_at(cell) is None:
                    m.terrain[cell[0]][cell[1]] = terrain

    def free_cells() -> list[Cell]:
        return [cell for cell in m.cells() if m.object_at(cell) is None]

    for landmark, cell in zip(graph.landmarks, rng.sample(free_cells(), len(graph.landmarks))):
        m.objects[cell[0]][cell[1]] = landmark

    for kind in graph.pickable:
        lo, hi = config.counts.get(kind, (0, 0))
        for _ in range(rng.randint(lo, hi)):
            cell = rng.choice(free_cells())
            m.objects[cell[0]][cell[1]] = kind

    bare = [cell for cell in free_cells() if m.terrain_at(cell) is None]
    m.agent = rng.choice(bare or free_cells())
    return m


# -- feasibility -------------------------------------------------------------------


def feasible_for(world_map: GridMap, task: Task, graph: WorldGraph,
                 mode: str = "demonstration") -> FeasibilityReport:
    """Static resource check, then an oracle dry run; feasible iff it completes."""
    if not goal_attainable(graph, task.goal, world_map, frozenset(), []):
        return FeasibilityReport(False, "goal unattainable from the start")
    try:
        # dry-run on a copy: the caller's map must stay pristine
        roll = rollout(graph, task, world_map.copy(), mode=mode)
    except OracleStuck as exc:
        return FeasibilityReport(False, f"oracle stuck: {exc}")
    if roll.outcome != "complete":
        return FeasibilityReport(False, f"dry run ended {roll.outcome}")
    return FeasibilityReport(True, rollout=roll)


def _ambiguity_floors(graph: WorldGraph, task: Task) -> tuple[dict[str, int], dict[str, int]]:
    """Minimum terrain-cell and object counts that make a demo unambiguous.

    A single target instance can make distinct goals act identically (one
    water cell: "dig dirt on water" walks like "dig dirt covering water";
    one chicken: "catch chicken" walks like "clear all the chickens"), so
    goal-referenced terrains and removable kinds must appear at least twice.
    """
    terrain_floor: dict[str, int] = {}
    object_floor: dict[str, int] = {}
    for t in task.constraints.rewards + task.constraints.penalties:
        terrain_floor.setdefault(t, 1)
    for atom in task.goal.atoms:
        if atom.kind == "cover":
            terrain_floor[atom.target] = 2
        elif atom.kind == "clear":
            for k in atom.kinds:
                object_floor[k] = 2
        elif atom.kind == "build_on":
            st = graph.subtasks[atom.subtask]
            if atom.dest in graph.natural_terrains:
                floor = 2 if st.kind == "terrain" else 1
                terrain_floor[atom.dest] = max(terrain_floor.get(atom.dest, 0), floor)
        elif atom.kind == "subtask":
            st = graph.subtasks[atom.subtask]
            if st.kind == "harvest" and st.removes and st.at in graph.pickable:
                object_floor[st.at] = 2
    return terrain_floor, object_floor


def _station_final(graph: WorldGraph, task: Task) -> bool:
    """A then-nav goal whose last act already happens on the landmark."""
    if task.goal.landmark is None or not task.goal.atoms:
        return False
    alias = graph.landmark_objects(task.goal.landmark)
    atom = task.goal.atoms[-1]
    if atom.kind != "subtask":
        return False
    return graph.subtasks[atom.subtask].at in alias


def demo_gaps(graph: WorldGraph, task: Task, world_map: GridMap,
              roll: Rollout) -> Optional[str]:
    """Why a completed dry run still makes a poor demonstration, if it does."""
    terrain_floor, object_floor = _ambiguity_floors(graph, task)
    for t, floor in terrain_floor.items():
        if len(world_map.find_terrain(t)) < floor:
            return f"needs {floor} cells of {t}"
    for k, floor in object_floor.items():
        if len(world_map.find_objects(k)) < floor:
            return f"needs {floor} of {k}"
    present = {t for t in world_map.present_terrains() if t in graph.natural_terrains}
    if roll.mode == "demonstration" and not present <= roll.episode.traversed:
        missing = ", ".join(sorted(present - roll.episode.traversed))
        return f"demo never traversed {missing}"
    if task.goal.landmark is not None and not _station_final(graph, task):
        goto = graph.goto_subtask(task.goal.landmark)
        if not roll.log or roll.log[-1].subtask != goto:
            return "final approach to the landmark not visible"
    return None


def generate_feasible(config: MapGenConfig, task: Task, seed: int,
                      graph: Optional[WorldGraph] = None,
                      mode: str = "demonstration",
                      return_rollout: bool = False):
    """Rejection-sample maps until one supports a clean oracle run.

    Deterministic in (config, task, seed).  Raises InfeasibleMapError once
    the attempt budget runs out.
    """
    graph = graph or default_graph()
    terrain_floor, object_floor = _ambiguity_floors(graph, task)
    counts = dict(config.counts)
    for kind, floor in object_floor.items():
        lo, hi = counts.get(kind, (0, 0))
        counts[kind] = (max(lo, floor), max(hi, floor))
    cfg = replace(config, counts=counts)

    task_key = task.task_id(graph)
    last = "no attempts made"
    for attempt in range(config.feasibility_attempts):
        m = generate(cfg, derive_seed("mapgen", task_key, str(seed), str(attempt)), graph)
        report = feasible_for(m, task, graph, mode=mode)
        if not report.feasible:
            last = report.reason
            continue
        gap = demo_gaps(graph, task, m, report.rollout)
        if gap is not None:
            last = gap
            continue
        if return_rollout:
            return m, report.rollout
        return m
    raise InfeasibleMapError(
        f"no feasible map for {task.text(graph)!r} seed {seed} "
        f"after {config.feasibility_attempts} attempts (last: {last})")
