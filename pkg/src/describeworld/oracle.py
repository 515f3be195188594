"""The scripted expert: planning, pathfinding, and full rollouts.

Planning is stateless. Each step the oracle rebuilds the remaining plan from
the episode state: one leg per unsatisfied goal atom instance (covering and
clearing repeat per remaining cell), an instrumental placement when a
destination terrain does not exist yet, the requirement closure behind all of
it, and the navigation tail. Legs sort by canonical subtask order and the
lowest-indexed executable leg runs next; a leg whose station or target cell
does not exist yet simply waits its turn.

Pathfinding is integer Dijkstra. Entering a cell costs 10, 510 on penalty
terrain, 5 on a reward cell whose bonus is still armed (never below 1), so the
expert avoids penalties and drifts over unclaimed rewards. Ties break on
(distance, row, column), which keeps every rollout deterministic.

In demonstration mode, the expert walks over one cell of every natural terrain
present that it has not yet touched before starting its final leg, so a
watcher sees each terrain's reward effect at least once.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field
from typing import Optional

from .errors import OracleStuck
from .graph import MOVEMENT_ACTIONS, WorldGraph
from .grid import Cell, GridMap
from .lang import Q_COVER, Q_DEST, Q_EMPTY, Qualifier, instruction_text, log_phrase
from .tasks import Task, atom_satisfied
from .world import Episode

_COST_BASE = 10
_COST_PENALTY = 500
_COST_REWARD_DISCOUNT = 5
_COST_FLOOR = 1

_ACTION_OF_DELTA = {(-1, 0): "up", (1, 0): "down", (0, -1): "left", (0, 1): "right"}


@dataclass(frozen=True)
class Leg:
    subtask: str
    qualifier: Optional[Qualifier] = None


# -- pathfinding -----------------------------------------------------------------


def _entry_cost(ep: Episode, cell: Cell, constraints=None) -> int:
    terrain = ep.map.terrain_at(cell)
    cost = _COST_BASE
    if constraints is None:
        constraints = ep.task.constraints if ep.task else None
    if constraints is not None and terrain is not None:
        role = constraints.role(terrain)
        if role == "penalty":
            cost += _COST_PENALTY
        elif role == "reward" and cell in ep.armed:
            cost -= _COST_REWARD_DISCOUNT
    return max(_COST_FLOOR, cost)


def shortest_path(ep: Episode, start: Cell, targets: set[Cell],
                  blocked: frozenset[Cell] = frozenset(),
                  constraints=None) -> Optional[list[Cell]]:
    """Cheapest path from start to the nearest target; [] if already there.

    Deterministic: the heap orders by (distance, row, column) and neighbor
    expansion order is fixed, so equal-cost ties always resolve the same way.
    """
    if start in targets:
        return []
    if constraints is None:
        constraints = ep.task.constraints if ep.task else None
    m = ep.map
    height, width = m.height, m.width
    # entry cost per cell, computed once; mirrors _entry_cost exactly
    costs = [[_COST_BASE] * width for _ in range(height)]
    if constraints is not None and (constraints.rewards or constraints.penalties):
        armed = ep.armed
        for r in range(height):
            trow, crow = m.terrain[r], costs[r]
            for c in range(width):
                terrain = trow[c]
                if terrain is None:
                    continue
                role = constraints.role(terrain)
                if role == "penalty":
                    crow[c] = max(_COST_FLOOR, _COST_BASE + _COST_PENALTY)
                elif role == "reward" and (r, c) in armed:
                    crow[c] = max(_COST_FLOOR, _COST_BASE - _COST_REWARD_DISCOUNT)
    big = 1 << 30
    dist = [[big] * width for _ in range(height)]
    parent: list[list[Optional[Cell]]] = [[None] * width for _ in range(height)]
    dist[start[0]][start[1]] = 0
    heap: list[tuple[int, Cell]] = [(0, start)]
    pop, push = heapq.heappop, heapq.heappush
    has_blocked = bool(blocked)
    while heap:
        d, cell = pop(heap)
        r, c = cell
        if d > dist[r][c]:
            continue
        if cell in targets:
            path = [cell]
            while path[-1] != start:
                pr, pc = path[-1]
                path.append(parent[pr][pc])
            path.reverse()
            return path[1:]
        for dr, dc in ((-1, 0), (1, 0), (0, -1), (0, 1)):
            nr, nc = r + dr, c + dc
            if nr < 0 or nc < 0 or nr >= height or nc >= width:
                continue
            if has_blocked and (nr, nc) in blocked:
                continue
            nd = d + costs[nr][nc]
            if nd < dist[nr][nc]:
                dist[nr][nc] = nd
                parent[nr][nc] = cell
                push(heap, (nd, (nr, nc)))
    return None


# -- planning --------------------------------------------------------------------


def _needs_bare_cell(st) -> bool:
    # two-step recipes only open on object-free cells; the single-action
    # terrain placements fire on any cell
    return st.structure is not None or len(st.actions) > 1


def _dest_cell_exists(world_map: GridMap, dest: str, need_free: bool) -> bool:
    for cell in world_map.find_terrain(dest):
        if not need_free or world_map.object_at(cell) is None:
            return True
    return False


def remaining_plan(graph: WorldGraph, ep: Episode, task: Task) -> list[Leg]:
    """Flattened list of what is left to do, in canonical order."""
    held = ep.held()
    m = ep.map
    objs = m.present_objects()
    legs: list[Leg] = []
    closure_targets: list[str] = []

    for atom in task.goal.atoms:
        if atom_satisfied(graph, atom, m, ep.ledger):
            continue
        if atom.kind == "subtask":
            st = graph.subtasks[atom.subtask]
            qual = Qualifier(Q_EMPTY) if st.kind in ("terrain", "structure") else None
            legs.append(Leg(atom.subtask, qual))
            closure_targets.append(atom.subtask)
        elif atom.kind == "build_on":
            st = graph.subtasks[atom.subtask]
            legs.append(Leg(atom.subtask, Qualifier(Q_DEST, atom.dest)))
            closure_targets.append(atom.subtask)
            if atom.dest in graph.placeable_terrains and not _dest_cell_exists(
                    m, atom.dest, need_free=_needs_bare_cell(st)):
                place = graph.terrain_subtask(atom.dest)
                legs.append(Leg(place, Qualifier(Q_EMPTY)))
                closure_targets.append(place)
        elif atom.kind == "cover":
            count = len(m.find_terrain(atom.target))
            legs.extend([Leg(atom.subtask, Qualifier(Q_COVER, atom.target))] * count)
            closure_targets.append(atom.subtask)
        else:  # clear
            for kind in atom.kinds:
                sub = graph.harvest_subtask(kind)
                count = len(m.find_objects(kind))
                legs.extend([Leg(sub)] * count)
                if count:
                    closure_targets.append(sub)

    if task.goal.landmark is not None:
        legs.append(Leg(graph.goto_subtask(task.goal.landmark)))

    goal_subtasks = {leg.subtask for leg in legs}
    done = {ev.subtask for ev in ep.ledger}
    for sid in graph.closure(closure_targets, held, objs):
        if sid in goal_subtasks:
            continue
        st = graph.subtasks[sid]
        if st.kind == "goto":
            continue
        if st.yields and set(st.yields) <= held:
            continue
        if not st.yields:
            # station transform (light furnace): skip once done
            if sid in done or (st.transforms_to is not None and st.transforms_to in objs):
                continue
        legs.append(Leg(sid))

    legs.sort(key=lambda leg: graph.canonical_index(leg.subtask))
    return legs


def leg_targets(graph: WorldGraph, ep: Episode, leg: Leg) -> list[Cell]:
    st = graph.subtasks[leg.subtask]
    m = ep.map
    if st.kind == "goto":
        cells = []
        for name in sorted(graph.landmark_objects(st.at)):
            cells.extend(m.find_objects(name))
        return cells
    if st.at is not None:
        return m.find_objects(st.at)
    q = leg.qualifier
    if q is not None and q.kind in (Q_COVER, Q_DEST):
        cells = m.find_terrain(q.terrain)
        if _needs_bare_cell(st):
            cells = [c for c in cells if m.object_at(c) is None]
        return cells
    # "empty cell" legs: bare cells first, any object-free cell as fallback
    cells = [c for c in m.cells()
             if m.object_at(c) is None and m.terrain_at(c) is None]
    if not cells:
        cells = [c for c in m.cells() if m.object_at(c) is None]
    return cells


def leg_executable(graph: WorldGraph, ep: Episode, leg: Leg) -> bool:
    if not graph.requirements_met(leg.subtask, ep.held()):
        return False
    return bool(leg_targets(graph, ep, leg))


def next_leg(graph: WorldGraph, ep: Episode, task: Task) -> Optional[Leg]:
    """The leg the expert works on now: lowest canonical slot that can run."""
    for leg in remaining_plan(graph, ep, task):
        if leg_executable(graph, ep, leg):
            return leg
    return None


# -- acting ----------------------------------------------------------------------


def _coverage_move(graph: WorldGraph, ep: Episode, leg: Leg) -> Optional[str]:
    """A step toward untouched natural terrain, walked before the final leg."""
    present = {t for t in ep.map.present_terrains() if t in graph.natural_terrains}
    uncovered = present - ep.traversed
    if not uncovered or ep.pending is not None:
        return None
    cells = {c for c in ep.map.cells() if ep.map.terrain_at(c) in uncovered}
    st = graph.subtasks[leg.subtask]
    blocked: frozenset[Cell] = frozenset()
    if st.kind == "goto":
        # stepping on the landmark now would end the episode early
        blocked = frozenset(
            c for name in graph.landmark_objects(st.at)
            for c in ep.map.find_objects(name))
        cells -= blocked
    if not cells:
        return None
    path = shortest_path(ep, ep.map.agent, cells, blocked)
    if not path:
        return None
    return _step_action(ep.map.agent, path[0])


def _step_action(src: Cell, dst: Cell) -> str:
    return _ACTION_OF_DELTA[(dst[0] - src[0], dst[1] - src[1])]


def decide(graph: WorldGraph, ep: Episode, task: Task,
           mode: str = "expert") -> tuple[str, Leg]:
    """The expert's next action and the leg it serves."""
    legs = remaining_plan(graph, ep, task)
    current = None
    for leg in legs:
        if leg_executable(graph, ep, leg):
            current = leg
            break
    if current is None:
        raise OracleStuck(f"no executable leg among {len(legs)}")
    if mode == "demonstration" and len(legs) == 1:
        move = _coverage_move(graph, ep, current)
        if move is not None:
            return move, current
    targets = set(leg_targets(graph, ep, current))
    st = graph.subtasks[current.subtask]
    if ep.map.agent in targets:
        if st.kind == "goto":
            # arrival would have ended the episode already
            raise OracleStuck("standing on the landmark with the goal open")
        if st.two_step:
            fam = graph.family_of[current.subtask]
            if ep.pending is not None and ep.pending.cell == ep.map.agent \
                    and ep.pending.family == fam:
                return st.actions[1], current
            return st.actions[0], current
        return st.actions[0], current
    blocked: frozenset[Cell] = frozenset()
    path = shortest_path(ep, ep.map.agent, targets, blocked)
    if not path:
        raise OracleStuck(f"no path to targets of {current.subtask!r}")
    return _step_action(ep.map.agent, path[0]), current


def expert_action(graph: WorldGraph, ep: Episode, task: Task,
                  mode: str = "expert") -> str:
    return decide(graph, ep, task, mode)[0]


# -- rollouts ----------------------------------------------------------------------


@dataclass
class LogEntry:
    subtask: str
    qualifier: Optional[Qualifier]
    start_step: int
    steps: int = 0
    moved: bool = False
    phrase: str = ""
    instruction: str = ""

    def key(self) -> tuple:
        return (self.subtask, self.qualifier)


@dataclass
class Rollout:
    task: Task
    mode: str
    initial_map: GridMap
    episode: Episode
    log: list[LogEntry] = field(default_factory=list)

    @property
    def outcome(self) -> str:
        return self.episode.outcome or "running"

    @property
    def steps(self) -> int:
        return self.episode.steps

    @property
    def total_reward(self) -> int:
        return self.episode.total_reward

    def phrases(self) -> list[str]:
        return [e.phrase for e in self.log]

    def instructions(self) -> list[str]:
        return [e.instruction for e in self.log]


def rollout(graph: WorldGraph, task: Task, world_map: GridMap,
            mode: str = "expert", config: Optional[dict] = None) -> Rollout:
    """Run the expert to episode end, building the per-leg transcript."""
    ep = Episode(task, world_map, graph, config)
    out = Rollout(task=task, mode=mode, initial_map=world_map.copy(), episode=ep)
    entry: Optional[LogEntry] = None

    def close(e: LogEntry) -> None:
        e.phrase = log_phrase(graph, e.subtask, e.qualifier, task.constraints, e.moved)
        out.log.append(e)

    while not ep.done:
        action, leg = decide(graph, ep, task, mode)
        if entry is not None and entry.key() != (leg.subtask, leg.qualifier):
            close(entry)
            entry = None
        if entry is None:
            entry = LogEntry(
                subtask=leg.subtask,
                qualifier=leg.qualifier,
                start_step=ep.steps,
                instruction=instruction_text(graph, leg.subtask, leg.qualifier,
                                             task.constraints),
            )
        tr = ep.step(action)
        entry.steps += 1
        entry.moved = entry.moved or action in MOVEMENT_ACTIONS
        st = graph.subtasks[leg.subtask]
        arrived = st.kind == "goto" and ep.map.object_at(ep.map.agent) == st.at
        if tr.completed == leg.subtask or arrived or ep.done:
            close(entry)
            entry = None
    if entry is not None:  # pragma: no cover - loop always closes on done
        close(entry)
    return out
