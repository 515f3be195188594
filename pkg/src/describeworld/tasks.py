"""Goal atoms, end goals, constraint sets, and the enumerated task universe.

An end goal is one of:
  - navigation:            "reach the jeweler."
  - a single atom:         "build fence on water."
  - two atoms, unordered:  "cut wood and make net in any order."
  - atom then navigation:  "make bed, then reach the lumbershop."

Atoms come in four shapes: a bare subtask, a subtask on a destination terrain,
covering all of a natural terrain with one placeable, and clearing one or two
object kinds. Every goal is paired with four constraint sets (reward/penalty
roles over the natural terrains), giving the task universe.

Canonical text for goals and tasks is built here; parsing lives in lang.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import lru_cache
from typing import TYPE_CHECKING, Optional, Sequence

from .graph import WorldGraph, default_graph
from .grid import GridMap
from .hashutil import hash_hex, stable_hash64

if TYPE_CHECKING:  # pragma: no cover - typing only
    from .world import CompletionEvent

CONSTRAINT_CATEGORIES = ("0R1P", "0R2P", "1R0P", "1R1P", "2R0P")

PAIR_SAMPLE_SIZE = 1466


@dataclass(frozen=True)
class Atom:
    kind: str                       # subtask | build_on | cover | clear
    subtask: Optional[str] = None   # primary subtask id (not for clear)
    dest: Optional[str] = None      # build_on destination terrain
    target: Optional[str] = None    # cover target (natural terrain)
    kinds: tuple[str, ...] = ()     # clear object kinds, registry order

    def text(self, graph: WorldGraph) -> str:
        if self.kind == "subtask":
            return self.subtask
        if self.kind == "build_on":
            return f"{self.subtask} on {self.dest}"
        if self.kind == "cover":
            return f"{self.subtask} covering all the {self.target}"
        names = [f"the {graph.clear_names[k]}" for k in self.kinds]
        return "clear all of " + " and ".join(names)

    def references_terrain(self, terrain: str) -> bool:
        return self.dest == terrain or self.target == terrain

    def involved_subtasks(self, graph: WorldGraph) -> frozenset[str]:
        """Subtasks this atom directly exercises (primary plus dest placement)."""
        out: set[str] = set()
        if self.subtask is not None:
            out.add(self.subtask)
        if self.kind == "build_on" and self.dest in graph.placeable_terrains:
            out.add(graph.terrain_subtask(self.dest))
        if self.kind == "clear":
            for k in self.kinds:
                sub = graph.harvest_subtask(k)
                if sub is not None:
                    out.add(sub)
        return frozenset(out)


@dataclass(frozen=True)
class EndGoal:
    atoms: tuple[Atom, ...]
    landmark: Optional[str] = None

    @property
    def category(self) -> str:
        if not self.atoms:
            return "nav"
        if len(self.atoms) == 2:
            return "pair"
        return "then_nav" if self.landmark else "single"

    def sentence(self, graph: WorldGraph) -> str:
        if not self.atoms:
            return f"reach the {self.landmark}."
        if len(self.atoms) == 2:
            a, b = (atom.text(graph) for atom in self.atoms)
            return f"{a} and {b} in any order."
        body = self.atoms[0].text(graph)
        if self.landmark:
            return f"{body}, then reach the {self.landmark}."
        return f"{body}."

    def involved_subtasks(self, graph: WorldGraph) -> frozenset[str]:
        out: set[str] = set()
        for atom in self.atoms:
            out |= atom.involved_subtasks(graph)
        return frozenset(out)

    @property
    def has_cover(self) -> bool:
        return any(a.kind == "cover" for a in self.atoms)


@dataclass(frozen=True)
class ConstraintSet:
    rewards: tuple[str, ...]    # natural terrains granting the one-shot bonus
    penalties: tuple[str, ...]  # natural terrains charging on entry

    @property
    def category(self) -> str:
        return f"{len(self.rewards)}R{len(self.penalties)}P"

    def role(self, terrain: str) -> str:
        if terrain in self.rewards:
            return "reward"
        if terrain in self.penalties:
            return "penalty"
        return "neutral"

    def sentences(self) -> list[str]:
        out = [f"avoid walking on the {t}." for t in self.penalties]
        out += [f"walking on the {t} will reward you." for t in self.rewards]
        return out

    @classmethod
    def neutral(cls) -> "ConstraintSet":
        return cls(rewards=(), penalties=())


@dataclass(frozen=True)
class Task:
    goal: EndGoal
    constraints: ConstraintSet

    def text(self, graph: WorldGraph) -> str:
        parts = [self.goal.sentence(graph)] + self.constraints.sentences()
        return " ".join(parts)

    def goal_id(self, graph: WorldGraph) -> str:
        return hash_hex(self.goal.sentence(graph))

    def task_id(self, graph: WorldGraph) -> str:
        return hash_hex(self.text(graph))


# -- universe enumeration ------------------------------------------------------


def simple_atoms(graph: WorldGraph) -> list[Atom]:
    return [Atom("subtask", subtask=st.id) for st in graph.goalable_subtasks()]


def build_on_atoms(graph: WorldGraph) -> list[Atom]:
    out = []
    for st in graph.goalable_subtasks():
        if st.kind == "structure":
            # structures may target any terrain
            for dest in graph.terrains:
                out.append(Atom("build_on", subtask=st.id, dest=dest))
        elif st.kind == "terrain":
            # terrain placed over terrain only reads naturally for natural dests
            for dest in graph.natural_terrains:
                out.append(Atom("build_on", subtask=st.id, dest=dest))
    return out


def cover_atoms(graph: WorldGraph) -> list[Atom]:
    return [
        Atom("cover", subtask=graph.terrain_subtask(p), target=n)
        for p in graph.placeable_terrains
        for n in graph.natural_terrains
    ]


def clear_atoms(graph: WorldGraph) -> list[Atom]:
    # kinds read alphabetically inside a clear goal ("the grasses and the irons")
    kinds = sorted(graph.pickable)
    out = [Atom("clear", kinds=(k,)) for k in kinds]
    out += [Atom("clear", kinds=(a, b)) for a, b in itertools.combinations(kinds, 2)]
    return out


def _effective_closure(graph: WorldGraph, atom: Atom) -> frozenset[str]:
    """Everything a demonstration of this atom necessarily executes."""
    out: set[str] = set()
    for sid in atom.involved_subtasks(graph):
        out |= graph.closure_core(sid)
    return frozenset(out)


def _pair_allowed(graph: WorldGraph, a: Atom, b: Atom) -> bool:
    """Keep only pairs that are independent and order-free.

    Rejects pairs sharing a primary subtask, pairs where one atom is subsumed
    by the other's requirement closure (a demonstration of one would satisfy
    both, making the pair indistinguishable from the single goal), and pairs
    where a cover atom erases a natural terrain the other atom needs.
    """
    if a.subtask == b.subtask and a.subtask is not None:
        return False
    if a.subtask in _effective_closure(graph, b) or b.subtask in _effective_closure(graph, a):
        return False
    for x, y in ((a, b), (b, a)):
        if x.kind == "cover" and y.references_terrain(x.target):
            return False
    return True


def _sample_pairs(graph: WorldGraph) -> list[EndGoal]:
    pool = simple_atoms(graph) + build_on_atoms(graph) + cover_atoms(graph)
    ranked = []
    for a, b in itertools.combinations(pool, 2):
        if not _pair_allowed(graph, a, b):
            continue
        first, second = sorted(
            (a, b), key=lambda at: (graph.canonical_index(at.subtask), at.text(graph)))
        goal = EndGoal(atoms=(first, second))
        ranked.append((stable_hash64(goal.sentence(graph)), goal.sentence(graph), goal))
    ranked.sort(key=lambda t: (t[0], t[1]))
    if len(ranked) < PAIR_SAMPLE_SIZE:
        raise AssertionError(f"pair pool too small: {len(ranked)}")
    return [goal for _, _, goal in ranked[:PAIR_SAMPLE_SIZE]]


def enumerate_end_goals(graph: Optional[WorldGraph] = None) -> list[EndGoal]:
    """The full end-goal universe in deterministic order (2651 goals)."""
    graph = graph or default_graph()
    return _enumerate_end_goals_cached(graph)


@lru_cache(maxsize=2)
def _enumerate_end_goals_cached(graph: WorldGraph) -> list[EndGoal]:
    goals: list[EndGoal] = [EndGoal(atoms=(), landmark=lm) for lm in graph.landmarks]
    nav_free = simple_atoms(graph) + build_on_atoms(graph) + cover_atoms(graph)
    for atom in nav_free:
        goals.append(EndGoal(atoms=(atom,)))
    for atom in clear_atoms(graph):
        goals.append(EndGoal(atoms=(atom,)))
    for atom in nav_free:
        for lm in graph.landmarks:
            goals.append(EndGoal(atoms=(atom,), landmark=lm))
    goals.extend(_sample_pairs(graph))
    texts = [g.sentence(graph) for g in goals]
    if len(set(texts)) != len(texts):
        raise AssertionError("goal sentences are not unique")
    return goals


def universe_census(graph: Optional[WorldGraph] = None) -> dict[str, int]:
    graph = graph or default_graph()
    goals = enumerate_end_goals(graph)
    counts: dict[str, int] = {"nav": 0, "single": 0, "pair": 0, "then_nav": 0}
    for g in goals:
        counts[g.category] += 1
    counts["total"] = len(goals)
    counts["tasks"] = len(goals) * 4
    return counts


# -- constraint assignment -----------------------------------------------------


def _instantiate_constraints(graph: WorldGraph, category: str, salt: int) -> ConstraintSet:
    naturals = graph.natural_terrains
    n_rewards = int(category[0])
    n_penalties = int(category[2])
    pairs = list(itertools.combinations(range(3), 2))

    def pick(count: int, pool: Sequence[int], h: int) -> tuple[int, ...]:
        if count == 0:
            return ()
        if count == 1:
            return (pool[h % len(pool)],)
        options = [p for p in pairs if p[0] in pool and p[1] in pool]
        return options[h % len(options)]

    reward_idx = pick(n_rewards, range(3), salt)
    remaining = [i for i in range(3) if i not in reward_idx]
    penalty_idx = pick(n_penalties, remaining, salt // 7)
    return ConstraintSet(
        rewards=tuple(naturals[i] for i in sorted(reward_idx)),
        penalties=tuple(naturals[i] for i in sorted(penalty_idx)),
    )


def dropped_category(graph: WorldGraph, goal: EndGoal) -> str:
    h = stable_hash64("constraints:" + goal.sentence(graph))
    return CONSTRAINT_CATEGORIES[h % 5]


def constraint_sets(graph: WorldGraph, goal: EndGoal,
                    include_dropped: bool = False) -> list[ConstraintSet]:
    """The goal's four constraint sets (five with include_dropped)."""
    sentence = goal.sentence(graph)
    dropped = dropped_category(graph, goal)
    out = []
    for cat in CONSTRAINT_CATEGORIES:
        if cat == dropped and not include_dropped:
            continue
        out.append(_instantiate_constraints(
            graph, cat, stable_hash64(f"{cat}|{sentence}")))
    return out


def validation_task(graph: WorldGraph, goal: EndGoal) -> Task:
    """The held-out fifth-category instantiation of a goal."""
    cat = dropped_category(graph, goal)
    cs = _instantiate_constraints(
        graph, cat, stable_hash64(f"{cat}|{goal.sentence(graph)}"))
    return Task(goal=goal, constraints=cs)


def enumerate_tasks(graph: Optional[WorldGraph] = None) -> list[Task]:
    graph = graph or default_graph()
    out = []
    for goal in enumerate_end_goals(graph):
        for cs in constraint_sets(graph, goal):
            out.append(Task(goal=goal, constraints=cs))
    return out


def task_by_id(graph: WorldGraph, task_id: str) -> Task:
    for task in enumerate_tasks(graph):
        if task.task_id(graph) == task_id:
            return task
    raise KeyError(f"unknown task id {task_id!r}")


# -- satisfaction and attainability ---------------------------------------------


def atom_satisfied(graph: WorldGraph, atom: Atom, world_map: GridMap,
                   ledger: Sequence["CompletionEvent"]) -> bool:
    if atom.kind == "subtask":
        return any(ev.subtask == atom.subtask for ev in ledger)
    if atom.kind == "build_on":
        return any(ev.subtask == atom.subtask and ev.dest_terrain == atom.dest
                   for ev in ledger)
    if atom.kind == "cover":
        target = atom.target
        return all(target not in row for row in world_map.terrain)
    return all(k not in row for k in atom.kinds for row in world_map.objects)


def goal_satisfied(graph: WorldGraph, goal: EndGoal, world_map: GridMap,
                   ledger: Sequence["CompletionEvent"]) -> bool:
    """Current satisfaction: all atoms hold, and the agent stands on the landmark.

    The "then" ordering needs no history: if the agent is on the landmark the
    instant the last atom completes, or walks there afterwards, the conjunction
    holds now; if it visited earlier and left, it does not hold now.
    """
    if not all(atom_satisfied(graph, a, world_map, ledger) for a in goal.atoms):
        return False
    if goal.landmark is not None:
        return world_map.object_at(world_map.agent) in graph.landmark_objects(goal.landmark)
    return True


def _removable(graph: WorldGraph, obj: str, held: frozenset[str],
               objs: frozenset[str]) -> bool:
    sub = graph.harvest_subtask(obj)
    return sub is not None and graph.executable(sub, held, objs)


def _buildable_cell(graph: WorldGraph, world_map: GridMap, held: frozenset[str],
                    objs: frozenset[str], dest: Optional[str]) -> bool:
    """A cell where a structure could legally stand (after clearing if needed)."""
    for trow, orow in zip(world_map.terrain, world_map.objects):
        for t, obj in zip(trow, orow):
            if dest is not None and t != dest:
                continue
            if obj is None or _removable(graph, obj, held, objs):
                return True
    return False


def atom_attainable(graph: WorldGraph, atom: Atom, world_map: GridMap,
                    held: frozenset[str],
                    objs: Optional[frozenset[str]] = None) -> bool:
    if objs is None:
        objs = world_map.present_objects()
    if atom.kind == "clear":
        return all(
            k not in objs
            or graph.executable(graph.harvest_subtask(k), held, objs)
            for k in atom.kinds
        )
    st = graph.subtasks[atom.subtask]
    if not graph.executable(atom.subtask, held, objs):
        return False
    if atom.kind == "subtask":
        if st.kind == "structure":
            return _buildable_cell(graph, world_map, held, objs, None)
        return True
    if atom.kind == "cover":
        return True  # target cells either remain (placeable anywhere) or none are left
    # build_on
    if st.kind == "terrain":
        # placing over a natural destination needs a destination cell left
        return any(atom.dest in row for row in world_map.terrain)
    if atom.dest in graph.natural_terrains:
        return _buildable_cell(graph, world_map, held, objs, atom.dest)
    # placeable destination: need somewhere to stand a structure, plus the
    # ability to write the destination terrain there first
    place = graph.terrain_subtask(atom.dest)
    return (_buildable_cell(graph, world_map, held, objs, None)
            and graph.executable(place, held, objs))


def goal_attainable(graph: WorldGraph, goal: EndGoal, world_map: GridMap,
                    held: frozenset[str],
                    ledger: Sequence["CompletionEvent"]) -> bool:
    """Resource-feasibility check, monotone: once false it stays false.

    Items only accumulate and objects only disappear (structures are permanent,
    natural terrain never comes back), so each clause can only flip one way.
    """
    objs = world_map.present_objects()
    for atom in goal.atoms:
        if atom_satisfied(graph, atom, world_map, ledger):
            continue
        if not atom_attainable(graph, atom, world_map, held, objs):
            return False
    return True
