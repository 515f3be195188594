"""World definition loading and the subtask dependency graph.

The YAML config is the single source of truth for object/terrain/item
registries, the 56 subtasks in canonical planning order, and the two-step
recipe families. This module validates it on load and answers the structural
questions the engine, planner, and task layer ask: which subtask an
(object, action) pair triggers, what a subtask needs, what produces an item,
and the transitive closure of requirements behind a set of targets.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources
from typing import Iterable, Mapping, Optional

import yaml

from .errors import ConfigError, UnsupportedRecipe
from .hashutil import config_digest

MOVEMENT_ACTIONS = ("up", "down", "left", "right")

# Alias accepted by compose_recipe for the ingredient that is stored as an item.
_INGREDIENT_ALIASES = {"diamond": "diamond ore", "plain": None, "none": None}


@dataclass(frozen=True)
class Subtask:
    id: str
    kind: str                       # harvest | craft | terrain | structure | goto
    index: int                      # position in canonical order
    actions: tuple[str, ...]        # one action, or (first, second) for family recipes
    requires: tuple[tuple[str, ...], ...]  # groups of alternative items
    yields: tuple[str, ...] = ()
    at: Optional[str] = None        # object the agent stands on (harvest/craft/goto)
    removes: bool = False           # harvest removes the object from the cell
    terrain: Optional[str] = None   # terrain written (kind terrain)
    structure: Optional[str] = None  # object built (kind structure)
    transforms_to: Optional[str] = None  # station object after the craft
    goal: bool = True               # usable as a goal atom

    @property
    def two_step(self) -> bool:
        return len(self.actions) == 2


@dataclass(frozen=True)
class RecipeCell:
    family: str
    second_action: str
    ingredient: Optional[str]       # extra item, None for the base recipe
    subtask: str


@dataclass(frozen=True)
class RecipeFamily:
    name: str
    kind: str                       # terrain | structure
    first_action: str
    base_requires: tuple[str, ...]
    cells: Mapping[str, RecipeCell]  # keyed by second action


@dataclass(eq=False)
class WorldGraph:
    """Parsed and validated world definition.

    eq=False keeps the default identity hash so cached methods work; graphs are
    effectively singletons per config file.
    """

    raw: dict
    config_hash: str
    actions: tuple[str, ...]
    natural_terrains: tuple[str, ...]
    placeable_terrains: tuple[str, ...]
    items: tuple[str, ...]
    pickable: tuple[str, ...]
    fixtures: tuple[str, ...]
    structures: tuple[str, ...]
    landmarks: tuple[str, ...]
    object_producers: Mapping[str, str]
    subtasks: Mapping[str, Subtask]
    canonical_order: tuple[str, ...]
    families: Mapping[str, RecipeFamily]
    clear_names: Mapping[str, str]
    engine: dict

    # derived lookup tables
    producer_of: dict[str, str] = field(default_factory=dict)
    object_ids: dict[str, int] = field(default_factory=dict)
    terrain_ids: dict[str, int] = field(default_factory=dict)
    family_of: dict[str, str] = field(default_factory=dict)
    _dispatch: dict[tuple[str, str], str] = field(default_factory=dict)

    # -- registry helpers ---------------------------------------------------

    @property
    def terrains(self) -> tuple[str, ...]:
        return self.natural_terrains + self.placeable_terrains

    @property
    def objects(self) -> tuple[str, ...]:
        return self.pickable + self.fixtures + self.structures

    def object_id(self, name: Optional[str]) -> int:
        return 0 if name is None else self.object_ids[name]

    def terrain_id(self, name: Optional[str]) -> int:
        return 0 if name is None else self.terrain_ids[name]

    def object_name(self, oid: int) -> Optional[str]:
        return None if oid == 0 else self.objects[oid - 1]

    def terrain_name(self, tid: int) -> Optional[str]:
        return None if tid == 0 else self.terrains[tid - 1]

    def canonical_index(self, subtask_id: str) -> int:
        return self.subtasks[subtask_id].index

    def station_subtask(self, obj: str, action: str) -> Optional[str]:
        """Subtask triggered by `action` while standing on `obj`, if any."""
        return self._dispatch.get((obj, action))

    def landmark_objects(self, landmark: str) -> frozenset[str]:
        """The landmark itself plus anything a station action turns it into.

        Lighting the furnace swaps the object for "lit furnace"; navigation
        targets and goal checks must keep treating that cell as the furnace.
        """
        alias = {landmark}
        for st in self.subtasks.values():
            if st.at == landmark and st.transforms_to:
                alias.add(st.transforms_to)
        return frozenset(alias)

    def goto_subtask(self, landmark: str) -> str:
        return f"go to {landmark}"

    # -- requirement reasoning ----------------------------------------------

    def requirements_met(self, subtask_id: str, held: frozenset[str]) -> bool:
        st = self.subtasks[subtask_id]
        return all(any(alt in held for alt in group) for group in st.requires)

    def eligible(self, subtask_id: str, held: frozenset[str], map_objects: frozenset[str],
                 done: frozenset[str] = frozenset()) -> bool:
        """Can the subtask be executed now (somewhere on the map)?

        Checks held items, presence of the station/resource object, and that a
        one-shot craft was not already completed. Says nothing about reachability.
        """
        st = self.subtasks[subtask_id]
        if not self.requirements_met(subtask_id, held):
            return False
        if st.at is not None and st.at not in map_objects:
            return False
        if st.kind == "craft" and st.yields and set(st.yields) <= held:
            # nothing new to gain; crafts are possession-based
            return False
        if st.id in done and st.kind == "craft":
            return False
        return True

    def pick_branch(self, group: tuple[str, ...], held: frozenset[str],
                    map_objects: frozenset[str]) -> str:
        """Resolve an alternatives group to one item, deterministically.

        Prefers a held alternative, then the first alternative obtainable on
        this map, then the first listed.
        """
        if len(group) == 1:
            return group[0]
        for alt in group:
            if alt in held:
                return alt
        for alt in group:
            if self.obtainable(alt, held, map_objects):
                return alt
        return group[0]

    @lru_cache(maxsize=1 << 18)
    def obtainable(self, item: str, held: frozenset[str], map_objects: frozenset[str],
                   _seen: frozenset[str] = frozenset()) -> bool:
        """Is the item held or producible given the objects present on the map?"""
        if item in held:
            return True
        if item in _seen:
            return False
        producer = self.producer_of.get(item)
        if producer is None:
            return False
        return self.executable(producer, held, map_objects, _seen | {item})

    @lru_cache(maxsize=1 << 18)
    def executable(self, subtask_id: str, held: frozenset[str], map_objects: frozenset[str],
                   _seen: frozenset[str] = frozenset()) -> bool:
        """Can the subtask eventually run: station reachable or producible, items obtainable."""
        st = self.subtasks[subtask_id]
        if st.at is not None and st.at not in map_objects:
            maker = self.object_producers.get(st.at)
            if maker is None or not self.executable(maker, held, map_objects, _seen):
                return False
        for group in st.requires:
            if not any(self.obtainable(alt, held, map_objects, _seen) for alt in group):
                return False
        return True

    def closure(self, targets: Iterable[str], held: frozenset[str],
                map_objects: frozenset[str]) -> set[str]:
        """Transitive requirement closure of the target subtasks.

        Possession semantics: an item already held contributes nothing to the
        closure. Alternatives groups resolve through pick_branch, so the result
        is map-dependent (e.g. the fuel used to light the furnace).
        """
        return set(self._closure_cached(tuple(sorted(targets)), held, map_objects))

    @lru_cache(maxsize=1 << 14)
    def _closure_cached(self, targets: tuple[str, ...], held: frozenset[str],
                        map_objects: frozenset[str]) -> frozenset[str]:
        out: set[str] = set()

        def need(sid: str) -> None:
            if sid in out:
                return
            out.add(sid)
            st = self.subtasks[sid]
            if st.at is not None and st.at not in map_objects:
                maker = self.object_producers.get(st.at)
                if maker is not None:
                    need(maker)
            for group in st.requires:
                item = self.pick_branch(group, held, map_objects)
                if item in held:
                    continue
                producer = self.producer_of.get(item)
                if producer is not None:
                    need(producer)

        for t in targets:
            need(t)
        return frozenset(out)

    @lru_cache(maxsize=None)
    def closure_core(self, subtask_id: str) -> frozenset[str]:
        """Map-independent closure: every alternative branch expanded.

        Used for split bookkeeping and pair-goal redundancy checks, where the
        answer must not depend on a particular map.
        """
        out: set[str] = set()

        def need(sid: str) -> None:
            if sid in out:
                return
            out.add(sid)
            st = self.subtasks[sid]
            if st.at is not None and st.at in self.object_producers:
                need(self.object_producers[st.at])
            for group in st.requires:
                for alt in group:
                    producer = self.producer_of.get(alt)
                    if producer is not None:
                        need(producer)

        need(subtask_id)
        return frozenset(out)

    # -- recipe families -----------------------------------------------------

    def compose_recipe(self, base: str, ingredient: Optional[str]) -> RecipeCell:
        """Resolve (family, ingredient) to its product cell.

        Raises UnsupportedRecipe for the blank table cells, e.g. ("barn", "iron").
        """
        if base not in self.families:
            raise UnsupportedRecipe(f"unknown recipe family: {base!r}")
        fam = self.families[base]
        if ingredient is not None:
            ingredient = _INGREDIENT_ALIASES.get(ingredient, ingredient)
        for cell in fam.cells.values():
            if cell.ingredient == ingredient:
                return cell
        raise UnsupportedRecipe(f"no {base} recipe takes {ingredient or 'no ingredient'}")

    def audit_recipes(self) -> dict:
        """Cross-check the family table against the subtask graph.

        Returns populated/blank cell counts and a list of inconsistencies
        (empty on a healthy config).
        """
        errors: list[str] = []
        populated = 0
        use_actions = [a for a in self.actions if a.startswith("use_")]
        for fam in self.families.values():
            for action in use_actions:
                cell = fam.cells.get(action)
                if cell is None:
                    continue
                populated += 1
                st = self.subtasks.get(cell.subtask)
                if st is None:
                    errors.append(f"{fam.name}/{action}: product {cell.subtask!r} missing")
                    continue
                if st.actions != (fam.first_action, action):
                    errors.append(f"{cell.subtask}: actions {st.actions} != "
                                  f"({fam.first_action}, {action})")
                expected = [(alt,) for alt in fam.base_requires]
                if cell.ingredient is not None:
                    expected.append((cell.ingredient,))
                if sorted(st.requires) != sorted(tuple(e) for e in expected):
                    errors.append(f"{cell.subtask}: requires {st.requires} != {expected}")
                if fam.kind == "terrain" and st.terrain is None:
                    errors.append(f"{cell.subtask}: terrain family but no terrain")
                if fam.kind == "structure" and st.structure is None:
                    errors.append(f"{cell.subtask}: structure family but no structure")
        blanks = len(self.families) * len(use_actions) - populated
        return {"populated": populated, "blanks": blanks, "errors": errors}

    # -- goal-facing vocabularies ---------------------------------------------

    def goalable_subtasks(self) -> list[Subtask]:
        return [self.subtasks[sid] for sid in self.canonical_order
                if self.subtasks[sid].goal]

    def terrain_subtask(self, terrain: str) -> str:
        """The place subtask writing the given placeable terrain."""
        for st in self.subtasks.values():
            if st.kind == "terrain" and st.terrain == terrain:
                return st.id
        raise KeyError(terrain)

    def harvest_subtask(self, obj: str) -> Optional[str]:
        """The removing harvest subtask for an object kind (clear goals)."""
        for sid in self.canonical_order:
            st = self.subtasks[sid]
            if st.kind == "harvest" and st.at == obj and st.removes:
                return st.id
        return None


def _as_groups(raw: list) -> tuple[tuple[str, ...], ...]:
    return tuple(tuple(g) for g in raw)


def load_graph(path: Optional[str] = None) -> WorldGraph:
    """Load and validate a world definition (the packaged one by default)."""
    if path is None:
        text = resources.files("describeworld").joinpath("data/world.yaml").read_text()
    else:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    data = yaml.safe_load(text)

    subtasks: dict[str, Subtask] = {}
    order: list[str] = []
    for i, entry in enumerate(data["subtasks"]):
        entry = dict(entry)
        sid = entry["id"]
        if sid in subtasks:
            raise ConfigError(f"duplicate subtask id {sid!r}")
        actions = entry.get("actions")
        if actions is None:
            actions = [entry["action"]] if "action" in entry else []
        kind = entry["kind"]
        st = Subtask(
            id=sid,
            kind=kind,
            index=i,
            actions=tuple(actions),
            requires=_as_groups(entry.get("requires", [])),
            yields=tuple(entry.get("yields", [])),
            at=entry.get("at"),
            removes=entry.get("removes", kind == "harvest"),
            terrain=entry.get("terrain"),
            structure=entry.get("structure"),
            transforms_to=entry.get("transforms_to"),
            goal=entry.get("goal", True),
        )
        subtasks[sid] = st
        order.append(sid)

    families: dict[str, RecipeFamily] = {}
    for name, raw_fam in data["recipe_families"].items():
        cells = {
            action: RecipeCell(family=name, second_action=action,
                               ingredient=c.get("ingredient"), subtask=c["subtask"])
            for action, c in raw_fam["cells"].items()
        }
        families[name] = RecipeFamily(
            name=name, kind=raw_fam["kind"], first_action=raw_fam["first_action"],
            base_requires=tuple(raw_fam["base_requires"]), cells=cells,
        )

    g = WorldGraph(
        raw=data,
        config_hash=config_digest(data),
        actions=tuple(data["actions"]),
        natural_terrains=tuple(data["terrains"]["natural"]),
        placeable_terrains=tuple(data["terrains"]["placeable"]),
        items=tuple(data["items"]),
        pickable=tuple(data["objects"]["pickable"]),
        fixtures=tuple(data["objects"]["fixture"]),
        structures=tuple(data["objects"]["structure"]),
        landmarks=tuple(data["landmarks"]),
        object_producers=dict(data.get("object_producers", {})),
        subtasks=subtasks,
        canonical_order=tuple(order),
        families=families,
        clear_names=dict(data["clear_names"]),
        engine=dict(data["engine"]),
    )
    g.object_ids = {name: i + 1 for i, name in enumerate(g.objects)}
    g.terrain_ids = {name: i + 1 for i, name in enumerate(g.terrains)}
    for st in subtasks.values():
        for item in st.yields:
            if item in g.producer_of:
                raise ConfigError(f"item {item!r} has two producers")
            g.producer_of[item] = st.id
    for st in subtasks.values():
        if st.at is not None and st.kind in ("harvest", "craft") and st.actions:
            key = (st.at, st.actions[0])
            if key in g._dispatch:
                raise ConfigError(f"dispatch collision on {key}: "
                                  f"{g._dispatch[key]!r} vs {st.id!r}")
            g._dispatch[key] = st.id
    for fam in families.values():
        for cell in fam.cells.values():
            g.family_of[cell.subtask] = fam.name

    _validate(g)
    return g


def _validate(g: WorldGraph) -> None:
    def check(cond: bool, msg: str) -> None:
        if not cond:
            raise ConfigError(msg)

    check(len(g.actions) == 14, "expected 14 actions")
    check(len(g.pickable) == 11 and len(g.fixtures) == 5 and len(g.structures) == 13,
          "object registry must be 11 pickable + 5 fixtures + 13 structures")
    check(len(set(g.objects)) == 29, "object names must be 29 unique kinds")
    check(len(g.natural_terrains) == 3 and len(g.placeable_terrains) == 7,
          "terrains must be 3 natural + 7 placeable")
    check(len(g.items) == len(set(g.items)), "duplicate item names")
    check(set(g.landmarks) <= set(g.fixtures), "landmarks must be fixtures")

    for st in g.subtasks.values():
        for group in st.requires:
            check(len(group) >= 1, f"{st.id}: empty requirement group")
            for alt in group:
                check(alt in g.items, f"{st.id}: unknown item {alt!r}")
        for item in st.yields:
            check(item in g.items, f"{st.id}: unknown yield {item!r}")
        for a in st.actions:
            check(a in g.actions, f"{st.id}: unknown action {a!r}")
        if st.at is not None:
            check(st.at in g.objects, f"{st.id}: unknown object {st.at!r}")
        if st.terrain is not None:
            check(st.terrain in g.placeable_terrains, f"{st.id}: terrain {st.terrain!r}")
        if st.structure is not None:
            check(st.structure in g.structures, f"{st.id}: structure {st.structure!r}")
        if st.kind == "goto":
            check(st.at in g.landmarks, f"{st.id}: goto target must be a landmark")

    # craftable items are exactly those yielded by craft subtasks
    craftable = {item for st in g.subtasks.values() if st.kind == "craft"
                 for item in st.yields}
    check(len(craftable) == 19, f"expected 19 craftable items, got {len(craftable)}")
    gatherable = {item for st in g.subtasks.values() if st.kind == "harvest"
                  for item in st.yields}
    check(craftable | gatherable == set(g.items), "items without a producer")
    check(not craftable & gatherable, "item both crafted and gathered")

    # every structure and placeable terrain has exactly one producing subtask
    built = [st.structure for st in g.subtasks.values() if st.kind == "structure"]
    check(sorted(built) == sorted(g.structures), "structure subtasks != structures")
    placed = [st.terrain for st in g.subtasks.values() if st.kind == "terrain"]
    check(sorted(placed) == sorted(g.placeable_terrains), "terrain subtasks != placeables")

    # goal atom vocabulary: 12 gathers + 19 crafts + 13 builds + 7 places
    goalable = g.goalable_subtasks()
    by_kind: dict[str, int] = {}
    for st in goalable:
        by_kind[st.kind] = by_kind.get(st.kind, 0) + 1
    check(by_kind == {"harvest": 12, "craft": 19, "structure": 13, "terrain": 7},
          f"goal vocabulary off: {by_kind}")

    # requirement graph must be acyclic over items
    state: dict[str, int] = {}

    def visit(item: str) -> None:
        if state.get(item) == 1:
            raise ConfigError(f"requirement cycle through {item!r}")
        if state.get(item) == 2:
            return
        state[item] = 1
        producer = g.producer_of.get(item)
        if producer is not None:
            for group in g.subtasks[producer].requires:
                for alt in group:
                    visit(alt)
        state[item] = 2

    for item in g.items:
        visit(item)

    audit = g.audit_recipes()
    check(not audit["errors"], f"recipe table inconsistent: {audit['errors']}")
    check(audit["populated"] == 17 and audit["blanks"] == 3,
          f"recipe table shape off: {audit}")

    for obj, maker in g.object_producers.items():
        check(obj in g.objects and maker in g.subtasks, "bad object_producers entry")
        check(g.subtasks[maker].transforms_to == obj, "object_producers mismatch")


@lru_cache(maxsize=1)
def default_graph() -> WorldGraph:
    return load_graph()
