"""Demo-to-task inference and instruction following."""

import pytest

from describeworld.agents import follow_instruction, infer_constraints, infer_task
from describeworld.lang import parse_description
from describeworld.mapgen import default_config, generate_feasible
from describeworld.oracle import expert_action, rollout
from describeworld.records import record_from_rollout
from describeworld.world import Episode


def _demo(graph, text, seed=0):
    task = parse_description(graph, text)
    _, roll = generate_feasible(default_config(), task, seed, graph,
                                return_rollout=True)
    rec = record_from_rollout(graph, roll)
    return task, {"map": rec["map"], "mode": rec["mode"],
                  "transitions": [{"action": t["action"], "reward": t["reward"]}
                                  for t in rec["transitions"]]}


INVERTIBLE = [
    "reach the jeweler.",
    "reach the furnace.",
    "get iron ore. avoid walking on the lava.",
    "clear all of the grasses.",
    "dig dirt covering all the water. walking on the field will reward you.",
    "build fence on dirt.",
    "build barn and make goldware in any order.",
    "get spade, then reach the workspace.",
    "smelt silver. avoid walking on the water. walking on the lava will reward you.",
]


@pytest.mark.parametrize("text", INVERTIBLE)
def test_infer_task_recovers_text(graph, text):
    task, demo = _demo(graph, text)
    inferred = infer_task(graph, demo)
    assert inferred.text(graph) == text


def test_infer_constraints_reads_reward_deltas(graph):
    task, demo = _demo(
        graph, "reach the jeweler. avoid walking on the field."
               " walking on the lava will reward you.")
    cs = infer_constraints(graph, demo)
    assert cs == task.constraints


def test_station_final_twin_resolves_to_bare_goal(graph):
    # making the net happens on the lumbershop cell, so the bare goal and
    # its "then reach the lumbershop" twin leave identical demos; the
    # smaller goal is the canonical answer for both
    for text in ("make net.", "make net, then reach the lumbershop."):
        _, demo = _demo(graph, text)
        assert infer_task(graph, demo).text(graph) == "make net."


def test_inferred_policy_completes_fresh_maps(graph):
    text = "make net, then reach the lumbershop."
    task, demo = _demo(graph, text)
    inferred = infer_task(graph, demo)
    # the minimal reading still finishes the true task on unseen maps
    for seed in (11, 12):
        m = generate_feasible(default_config(), task, seed, graph, mode="expert")
        ep = Episode(task, m, graph)
        shadow = Episode(inferred, m.copy(), graph)
        while not ep.done:
            action = expert_action(graph, shadow, inferred)
            if not shadow.done:
                shadow.step(action)
            ep.step(action)
        assert ep.outcome == "complete"


def test_infer_task_rejects_unexplainable_demo(graph):
    _, demo = _demo(graph, "reach the jeweler.")
    demo["transitions"] = [{"action": "noop", "reward": -1}] * 3
    with pytest.raises(ValueError):
        infer_task(graph, demo)


def test_follow_instruction_tracks_expert(graph):
    # streaming the oracle's own instructions reproduces its actions
    text = "build fence on dirt. avoid walking on the water."
    task = parse_description(graph, text)
    m = generate_feasible(default_config(), task, 3, graph, mode="expert")
    ref = rollout(graph, task, m.copy())
    assert ref.outcome == "complete"

    from describeworld.oracle import next_leg
    from describeworld.lang import instruction_text

    ep = Episode(task, m.copy(), graph)
    shadow = Episode(None, m.copy(), graph)
    while not ep.done:
        leg = next_leg(graph, ep, task)
        assert leg is not None
        text_now = instruction_text(graph, leg.subtask, leg.qualifier,
                                    task.constraints)
        action = follow_instruction(graph, shadow, text_now)
        if not shadow.done:
            shadow.step(action)
        ep.step(action)
    assert ep.outcome == "complete"
    assert ep.steps == ref.steps
