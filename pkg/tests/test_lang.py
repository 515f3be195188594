"""Language surfaces: description round trips, instruction text, exact match."""

import pytest

from describeworld.errors import ParseError
from describeworld.lang import (
    Q_COVER,
    Q_DEST,
    Q_EMPTY,
    Qualifier,
    em_description,
    em_instructions,
    exact_match,
    instruction_text,
    log_phrase,
    parse_description,
    parse_instruction,
)
from describeworld.tasks import ConstraintSet, enumerate_end_goals, enumerate_tasks


NEUTRAL = ConstraintSet.neutral()
ONE_EACH = ConstraintSet(rewards=("lava",), penalties=("field",))


def test_description_round_trip_sampled(graph):
    # the exhaustive sweep lives in acceptance; a spread of 200 here
    tasks = enumerate_tasks(graph)
    for task in tasks[::53]:
        text = task.text(graph)
        parsed = parse_description(graph, text)
        assert parsed.text(graph) == text


def test_goal_only_descriptions_parse(graph):
    for goal in enumerate_end_goals(graph)[::301]:
        parsed = parse_description(graph, goal.sentence(graph))
        assert parsed.goal.sentence(graph) == goal.sentence(graph)
        assert parsed.constraints == NEUTRAL


def test_parse_rejects_garbage(graph):
    for bad in ["", "frobnicate the blorp.", "reach the volcano.",
                "avoid walking on the field."]:
        with pytest.raises(ParseError):
            parse_description(graph, bad)
    # missing final period is tolerated
    assert parse_description(graph, "reach the jeweler").text(graph) == \
        "reach the jeweler."


def test_instruction_text_fixed_surfaces(graph):
    assert instruction_text(graph, "cut wood", None, NEUTRAL) == \
        "go to tree and cut wood."
    assert instruction_text(graph, "go to jeweler", None, NEUTRAL) == \
        "go to the jeweler."
    assert instruction_text(graph, "make wood slats", None, ONE_EACH) == \
        ("go to the lumbershop and make wood slats."
         " avoid walking on field. walking on lava will reward you.")
    assert instruction_text(
        graph, "dig dirt", Qualifier(Q_COVER, "water"), NEUTRAL) == \
        "go to water and dig dirt."
    assert instruction_text(graph, "build fence", None, NEUTRAL) == \
        "go to empty cell and build fence."
    assert instruction_text(
        graph, "build fence", Qualifier(Q_DEST, "dirt"), NEUTRAL) == \
        "go to dirt and build fence."


def test_instruction_round_trip(graph):
    cases = [
        ("cut wood", None),
        ("get iron ore", None),
        ("make stone pickaxe", None),
        ("build fence", Qualifier(Q_DEST, "silver flooring")),
        ("dig dirt", Qualifier(Q_COVER, "water")),
        ("go to jeweler", None),
    ]
    for subtask, qual in cases:
        for cs in (NEUTRAL, ONE_EACH, ConstraintSet(("water",), ())):
            text = instruction_text(graph, subtask, qual, cs)
            parsed_sub, loc, parsed_cs = parse_instruction(graph, text)
            assert parsed_sub == subtask
            assert parsed_cs == cs
            if qual is not None:
                assert loc == qual.terrain


def test_parse_instruction_rejects_garbage(graph):
    for bad in ["cut wood.", "go to the moon.", "go to tree and fly."]:
        with pytest.raises(ParseError):
            parse_instruction(graph, bad)


def test_log_phrase_clause_only_when_moved(graph):
    assert log_phrase(graph, "cut wood", None, ONE_EACH, moved=False) == "cut wood"
    assert log_phrase(graph, "cut wood", None, ONE_EACH, moved=True) == \
        "cut wood, stepping on the lava and avoiding the field"
    assert log_phrase(graph, "go to jeweler", None, NEUTRAL, moved=True) == \
        "go to jeweler"
    assert log_phrase(
        graph, "place silver flooring", Qualifier(Q_COVER, "water"),
        ConstraintSet((), ("field",)), moved=True) == \
        "place silver flooring covering water, avoiding the field"
    assert log_phrase(
        graph, "build pig barn", Qualifier(Q_DEST, "dirt"), NEUTRAL,
        moved=True) == "build pig barn on dirt"
    assert log_phrase(
        graph, "dig dirt", Qualifier(Q_EMPTY), NEUTRAL, moved=False) == \
        "dig dirt on empty cell"


def test_exact_match_normalizes_whitespace():
    assert exact_match(" cut wood. ", "cut wood.")
    assert exact_match("a  b", "a b")
    assert not exact_match("cut wood.", "cut wood")


def test_em_description_splits_goal_from_constraints():
    gold = "reach the jeweler. avoid walking on the field."
    assert em_description(gold, gold) == {"full": True, "goal": True}
    assert em_description("reach the jeweler.", gold) == \
        {"full": False, "goal": True}
    assert em_description("reach the workspace.", gold) == \
        {"full": False, "goal": False}
    assert em_description("", gold) == {"full": False, "goal": False}


def test_em_instructions_all_and_last():
    gold = ["go to tree and cut wood.", "go to the jeweler."]
    assert em_instructions(list(gold), gold) == {"all": True, "last": True}
    assert em_instructions(["go to the jeweler."], gold) == \
        {"all": False, "last": True}
    assert em_instructions(gold + ["extra."], gold) == \
        {"all": False, "last": False}
    assert em_instructions([], gold) == {"all": False, "last": False}
