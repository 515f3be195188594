"""World graph: registry counts, recipe table, dependency closure."""

from describeworld.graph import MOVEMENT_ACTIONS, default_graph


def test_registry_counts(graph):
    assert len(graph.structures) == 13
    assert len(graph.placeable_terrains) == 7
    assert len(graph.natural_terrains) == 3
    assert len(graph.actions) == 14
    assert len(graph.pickable) == 11
    assert len(graph.fixtures) == 5
    # 29 object kinds total on the grid side
    assert len(graph.pickable) + len(graph.fixtures) + len(graph.structures) == 29


def test_action_vocabulary(graph):
    assert set(MOVEMENT_ACTIONS) == {"up", "down", "left", "right"}
    uses = [a for a in graph.actions if a.startswith("use_")]
    places = [a for a in graph.actions if a.startswith("place_")]
    assert len(uses) == 5 and len(places) == 4
    assert "pick_up" in graph.actions


def test_subtask_count_and_canonical_order(graph):
    assert len(graph.canonical_order) == 56
    assert len(set(graph.canonical_order)) == 56
    # goto subtasks exist for every landmark and sit at the tail
    for lm in graph.landmarks:
        assert graph.goto_subtask(lm) in graph.canonical_order
    assert graph.canonical_order[0] == "cut wood"


def test_canonical_index_monotone(graph):
    idx = [graph.canonical_index(s) for s in graph.canonical_order]
    assert idx == sorted(idx)


def test_recipe_audit(graph):
    audit = graph.audit_recipes()
    assert audit["errors"] == []
    assert audit["populated"] == 17
    assert audit["blanks"] == 3


def test_two_step_subtasks_have_two_actions(graph):
    for sid, st in graph.subtasks.items():
        if st.two_step:
            assert len(st.actions) == 2, sid
            assert all(a.startswith(("use_", "place_")) for a in st.actions)


def test_goal_subtasks_cover_products(graph):
    # every produced object maps back to exactly one producing subtask
    producers = graph.object_producers
    for item, maker in producers.items():
        assert maker in graph.subtasks, (item, maker)
    assert producers["lit furnace"] == "light furnace"


def test_landmark_alias_covers_transform(graph):
    alias = graph.landmark_objects("furnace")
    assert "furnace" in alias
    assert "lit furnace" in alias
    # landmarks without transforms alias only themselves
    assert graph.landmark_objects("jeweler") == frozenset({"jeweler"})


def test_requirements_met_closure(graph):
    held = frozenset()
    assert graph.requirements_met("cut wood", held)
    assert not graph.requirements_met("make stone pickaxe", held)
    assert graph.requirements_met("make stone pickaxe", frozenset({"stick", "stone"}))


def test_fuel_alternatives(graph):
    # lighting accepts either fuel
    assert graph.requirements_met("light furnace", frozenset({"coal"}))
    assert graph.requirements_met("light furnace", frozenset({"firewood"}))
    assert not graph.requirements_met("light furnace", frozenset())


def test_harvest_removal_flags(graph):
    assert graph.subtasks["cut hay"].removes
    assert graph.subtasks["get iron ore"].removes
    assert not graph.subtasks["get string"].removes
