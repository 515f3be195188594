"""The step engine.

An Episode binds a task to a map and advances one action at a time. Action
semantics:

  - up/down/left/right move the agent; the wall ring clamps movement. Entering
    a natural terrain cell applies the task's constraint role: penalties charge
    on every entry, reward cells pay out once per cell per episode.
  - pick_up and use_* on a cell with an object dispatch to the harvest or
    station craft registered for that (object, action) pair.
  - place_1/place_3 write dirt/road at the agent cell (any cell, object or not).
  - place_2 and use_2/use_3/use_4 on an object-free cell open a two-step recipe
    (flooring/barn/house/shrine); the very next action picks the ingredient and
    completes it. Anything else cancels the pending recipe.
  - use_1 on an object-free cell with no pending recipe builds a fence.

Every effective action appends a CompletionEvent to the ledger; goal
satisfaction and the monotone attainability check run after each step, then the
step cap. Reward is the sum of the step's event amounts.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from typing import Optional

from . import tasks as taskmod
from .errors import AmbiguityError
from .graph import MOVEMENT_ACTIONS, WorldGraph, default_graph
from .grid import Cell, GridMap
from .tasks import Task

_DELTAS = {"up": (-1, 0), "down": (1, 0), "left": (0, -1), "right": (0, 1)}

OUTCOME_COMPLETE = "complete"
OUTCOME_UNATTAINABLE = "unattainable"
OUTCOME_TIMEOUT = "timeout"


@dataclass(frozen=True)
class CompletionEvent:
    subtask: str
    step: int
    cell: Cell
    # terrain under a new structure, or the terrain a placement overwrote
    dest_terrain: Optional[str] = None


@dataclass(frozen=True)
class PendingRecipe:
    family: str
    cell: Cell


@dataclass(frozen=True)
class Transition:
    before: GridMap
    action: str
    reward: int
    after: GridMap
    inventory: str
    events: tuple[tuple[str, int], ...]
    completed: Optional[str] = None


class Episode:
    """One rollout of a task on a map. Constructing it is the reset."""

    def __init__(self, task: Optional[Task], world_map: GridMap,
                 graph: Optional[WorldGraph] = None,
                 config: Optional[dict] = None):
        self.graph = graph or default_graph()
        self.task = task
        self.map = world_map.copy()
        cfg = dict(self.graph.engine)
        if config:
            cfg.update(config)
        self.config = cfg
        self.inventory: Counter[str] = Counter()
        self.ledger: list[CompletionEvent] = []
        self.steps = 0
        self.total_reward = 0
        self.outcome: Optional[str] = None
        self.pending: Optional[PendingRecipe] = None
        self.transitions: list[Transition] = []
        self._snapshot = self.map.copy()
        # indexes of goal atoms already satisfied; satisfaction is monotone
        # (ledger is append-only, naturals never return, cleared kinds are
        # never buildable) so entries are final
        self._atoms_done: set[int] = set()
        # regenerated whenever the inventory changes
        self._held_cache: Optional[frozenset[str]] = None
        self._inv_text_cache: Optional[str] = None

        constraints = task.constraints if task else taskmod.ConstraintSet.neutral()
        self.armed: set[Cell] = {
            cell for cell in self.map.cells()
            if constraints.role(self.map.terrain_at(cell) or "") == "reward"
        }
        self.traversed: set[str] = set()
        self.traversal_counts = {"reward": 0, "penalty": 0, "neutral": 0}
        spawn_terrain = self.map.terrain_at(self.map.agent)
        if spawn_terrain in self.graph.natural_terrains:
            self.traversed.add(spawn_terrain)

    # -- views ------------------------------------------------------------------

    @property
    def done(self) -> bool:
        return self.outcome is not None

    def held(self) -> frozenset[str]:
        if self._held_cache is None:
            self._held_cache = frozenset(
                k for k, n in self.inventory.items() if n > 0)
        return self._held_cache

    def inventory_text(self) -> str:
        if self._inv_text_cache is None:
            self._inv_text_cache = ", ".join(
                k for k in self.graph.items if self.inventory[k] > 0)
        return self._inv_text_cache

    def observation(self):
        return self.map.observation(self.graph)

    def peek_completion(self, action: str) -> Optional[str]:
        """What the action would complete, without advancing the episode."""
        clone = Episode(self.task, self.map, self.graph, self.config)
        clone.inventory = Counter(self.inventory)
        clone.ledger = list(self.ledger)
        clone.steps = self.steps
        clone.pending = self.pending
        clone.armed = set(self.armed)
        clone._atoms_done = set(self._atoms_done)
        return clone.step(action).completed

    # -- stepping ---------------------------------------------------------------

    def step(self, action: str) -> Transition:
        if self.outcome is not None:
            raise RuntimeError("episode already ended")
        if action not in self.graph.actions:
            raise ValueError(f"unknown action {action!r}")
        self.steps += 1
        before = self._snapshot
        events: list[tuple[str, int]] = [("step", self.config["step_penalty"])]
        pending = self.pending
        self.pending = None  # a pending recipe survives exactly one action
        completed: Optional[str] = None

        if action in MOVEMENT_ACTIONS:
            self._move(action, events)
        elif action == "pick_up":
            completed = self._station_action(action)
        elif action.startswith("use_") or action.startswith("place_"):
            completed = self._apply_tool(action, pending)

        if completed is not None:
            ev = self.ledger[-1]
            if ev.subtask != completed:  # pragma: no cover - internal sanity
                raise AmbiguityError("ledger out of sync")

        self._check_termination(events)
        reward = sum(amount for _, amount in events)
        self.total_reward += reward
        self._snapshot = self.map.copy()
        tr = Transition(
            before=before,
            action=action,
            reward=reward,
            after=self._snapshot,
            inventory=self.inventory_text(),
            events=tuple(events),
            completed=completed,
        )
        self.transitions.append(tr)
        return tr

    # -- action resolution --------------------------------------------------------

    def _move(self, action: str, events: list[tuple[str, int]]) -> None:
        dr, dc = _DELTAS[action]
        r, c = self.map.agent
        nr, nc = r + dr, c + dc
        if not self.map.in_bounds((nr, nc)):
            return  # wall
        self.map.agent = (nr, nc)
        terrain = self.map.terrain_at((nr, nc))
        if terrain not in self.graph.natural_terrains:
            return
        self.traversed.add(terrain)
        constraints = self.task.constraints if self.task else taskmod.ConstraintSet.neutral()
        role = constraints.role(terrain)
        self.traversal_counts[role] += 1
        if role == "penalty":
            events.append(("terrain_penalty", self.config["terrain_penalty"]))
        elif role == "reward" and (nr, nc) in self.armed:
            self.armed.discard((nr, nc))
            events.append(("terrain_reward", self.config["terrain_reward"]))

    def _station_action(self, action: str) -> Optional[str]:
        """Harvests and station crafts: dispatch on (object here, action)."""
        obj = self.map.object_at(self.map.agent)
        if obj is None:
            return None
        sid = self.graph.station_subtask(obj, action)
        if sid is None:
            return None
        st = self.graph.subtasks[sid]
        if not self.graph.requirements_met(sid, self.held()):
            return None
        cell = self.map.agent
        for item in st.yields:
            self.inventory[item] += 1
        if st.yields:
            self._held_cache = self._inv_text_cache = None
        if st.kind == "harvest" and st.removes:
            self.map.set_object(cell, None)
        if st.transforms_to is not None:
            self.map.set_object(cell, st.transforms_to)
        self.ledger.append(CompletionEvent(sid, self.steps, cell, None))
        return sid

    def _apply_tool(self, action: str, pending: Optional[PendingRecipe]) -> Optional[str]:
        # second step of a two-step recipe takes precedence at its cell
        if pending is not None and pending.cell == self.map.agent:
            done = self._finish_recipe(pending, action)
            if done is not None:
                return done
        if action.startswith("use_") and self.map.object_at(self.map.agent) is not None:
            return self._station_action(action)
        return self._bare_cell_action(action)

    def _finish_recipe(self, pending: PendingRecipe, action: str) -> Optional[str]:
        fam = self.graph.families[pending.family]
        cell_spec = fam.cells.get(action)
        if cell_spec is None:
            return None
        sid = cell_spec.subtask
        if not self.graph.requirements_met(sid, self.held()):
            return None
        st = self.graph.subtasks[sid]
        if st.structure is not None and self.map.object_at(pending.cell) is not None:
            return None
        return self._build_here(sid, pending.cell)

    def _bare_cell_action(self, action: str) -> Optional[str]:
        cell = self.map.agent
        obj = self.map.object_at(cell)
        # single-action terrain placements work on any cell
        for sid in ("dig dirt", "place road"):
            st = self.graph.subtasks[sid]
            if st.actions == (action,):
                if not self.graph.requirements_met(sid, self.held()):
                    return None
                return self._build_here(sid, cell)
        if obj is not None:
            return None
        # open a two-step recipe
        for fam in self.graph.families.values():
            if fam.first_action == action:
                self.pending = PendingRecipe(fam.name, cell)
                return None
        # fence is the one single-action structure
        fence = self.graph.subtasks["build fence"]
        if fence.actions == (action,) and self.graph.requirements_met("build fence", self.held()):
            return self._build_here("build fence", cell)
        return None

    def _build_here(self, sid: str, cell: Cell) -> str:
        st = self.graph.subtasks[sid]
        dest = self.map.terrain_at(cell)
        if st.terrain is not None:
            self.map.set_terrain(cell, st.terrain)
        if st.structure is not None:
            self.map.set_object(cell, st.structure)
        for item in st.yields:
            self.inventory[item] += 1
        if st.yields:
            self._held_cache = self._inv_text_cache = None
        self.ledger.append(CompletionEvent(sid, self.steps, cell, dest))
        return sid

    # -- termination ----------------------------------------------------------------

    def _check_termination(self, events: list[tuple[str, int]]) -> None:
        if self.task is not None:
            goal = self.task.goal
            done = self._atoms_done
            if len(done) < len(goal.atoms):
                for i, atom in enumerate(goal.atoms):
                    if i not in done and taskmod.atom_satisfied(
                            self.graph, atom, self.map, self.ledger):
                        done.add(i)
            if len(done) == len(goal.atoms):
                if goal.landmark is None or self.map.object_at(self.map.agent) \
                        in self.graph.landmark_objects(goal.landmark):
                    self.outcome = OUTCOME_COMPLETE
                    bonus = self.config.get("completion_bonus", 0)
                    if bonus:
                        events.append(("completion", bonus))
                    return
            else:
                held = self.held()
                objs = self.map.present_objects()
                for i, atom in enumerate(goal.atoms):
                    if i not in done and not taskmod.atom_attainable(
                            self.graph, atom, self.map, held, objs):
                        self.outcome = OUTCOME_UNATTAINABLE
                        events.append(
                            ("unattainable", self.config["unattainable_penalty"]))
                        return
        if self.steps >= self.config["max_steps"]:
            self.outcome = OUTCOME_TIMEOUT
