"""Frozen end-to-end transcripts for six hand-built scenario maps.

Each case pins the full expert leg-phrase sequence. Any change to planning
order, pathfinding ties, recipe structure, or phrase rendering shows up here.
"""

import pytest

from describeworld.lang import parse_description
from describeworld.oracle import rollout

from conftest import make_map


def _roll(graph, m, text, mode="expert"):
    return rollout(graph, parse_description(graph, text), m, mode=mode)


GOLDEN = {
    "fence_on_silver_constrained": dict(
        agent=(0, 0),
        objects={(2, 1): "tree", (0, 3): "stone", (1, 5): "grass",
                 (3, 3): "spade", (4, 1): "coal", (5, 5): "silver ore",
                 (3, 1): "lumbershop", (4, 4): "workspace", (5, 2): "furnace",
                 (7, 7): "jeweler"},
        terrain={},
        text=("build fence on silver flooring, then reach the jeweler."
              " avoid walking on the field."
              " walking on the lava will reward you."),
        phrases=[
            "cut wood, stepping on the lava and avoiding the field",
            "get stone, stepping on the lava and avoiding the field",
            "get string, stepping on the lava and avoiding the field",
            "get spade, stepping on the lava and avoiding the field",
            "make stick, stepping on the lava and avoiding the field",
            "make wood slats",
            "make stone pickaxe, stepping on the lava and avoiding the field",
            "get coal, stepping on the lava and avoiding the field",
            "get silver ore, stepping on the lava and avoiding the field",
            "light furnace, stepping on the lava and avoiding the field",
            "smelt silver",
            "place silver flooring on empty cell, stepping on the lava and avoiding the field",
            "build fence on silver flooring",
            "go to jeweler, stepping on the lava and avoiding the field",
        ],
    ),
    "net_and_cover_water": dict(
        agent=(0, 0),
        objects={(1, 2): "tree", (0, 4): "stone", (2, 6): "grass",
                 (3, 0): "spade", (4, 6): "silver ore", (2, 3): "lumbershop",
                 (4, 3): "workspace", (5, 1): "furnace", (0, 7): "jeweler"},
        terrain={(6, 2): "water", (6, 3): "water", (6, 4): "water",
                 (6, 5): "water", (7, 2): "water", (7, 4): "water",
                 (7, 6): "water"},
        text=("make net and place silver flooring covering all the water"
              " in any order. avoid walking on the field."),
        phrases=[
            "cut wood, avoiding the field",
            "get stone, avoiding the field",
            "get string, avoiding the field",
            "get spade, avoiding the field",
            "make firewood, avoiding the field",
            "make stick",
            "make net",
            "make stone pickaxe, avoiding the field",
            "get silver ore, avoiding the field",
            "light furnace, avoiding the field",
            "smelt silver",
        ] + ["place silver flooring covering water, avoiding the field"] * 7,
    ),
    "dig_dirt_then_workspace": dict(
        agent=(7, 0),
        objects={(7, 2): "spade", (0, 0): "lumbershop", (0, 2): "furnace",
                 (0, 4): "jeweler", (3, 7): "workspace"},
        terrain={(6, 0): "water", (6, 1): "water", (6, 2): "water",
                 (6, 3): "water", (6, 4): "water", (6, 5): "water",
                 (6, 6): "water", (6, 7): "water", (5, 7): "water",
                 (4, 7): "water", (3, 7): "water"},
        text="dig dirt covering all the water, then reach the workspace.",
        phrases=["get spade"] + ["dig dirt covering water"] * 11,
    ),
    "clear_grass_and_iron": dict(
        agent=(0, 0),
        objects={(2, 2): "tree", (0, 5): "stone", (3, 4): "grass",
                 (5, 1): "grass", (6, 6): "grass", (1, 6): "iron ore",
                 (4, 0): "iron ore", (2, 0): "lumbershop", (3, 6): "workspace",
                 (7, 0): "furnace", (7, 3): "jeweler"},
        terrain={},
        text="clear all of the grasses and the irons.",
        phrases=[
            "cut wood", "get stone", "get string", "make stick",
            "make stone pickaxe", "make scythe", "get iron ore",
            "get iron ore", "cut hay", "cut hay", "cut hay",
        ],
    ),
    "two_structures_any_order": dict(
        agent=(0, 0),
        objects={(0, 2): "tree", (1, 4): "stone", (2, 0): "grass",
                 (3, 5): "spade", (6, 1): "coal", (5, 4): "iron ore",
                 (2, 6): "silver ore", (6, 6): "diamond ore", (4, 2): "pig",
                 (1, 1): "lumbershop", (3, 3): "workspace", (5, 0): "furnace",
                 (0, 7): "jeweler"},
        terrain={},
        text=("build pig barn on dirt and build diamond house on"
              " silver flooring in any order."),
        phrases=[
            "cut wood", "get stone", "get string", "get spade", "make stick",
            "make trap", "make net", "make wood slats", "make stone pickaxe",
            "catch pig", "make scythe", "get coal", "get iron ore",
            "get silver ore", "cut hay", "dig dirt on empty cell",
            "light furnace", "build pig barn on dirt", "smelt iron",
            "smelt silver", "make iron pickaxe", "get diamond ore",
            "place silver flooring on empty cell",
            "build diamond house on silver flooring",
        ],
    ),
    "diamond_flooring_on_field": dict(
        agent=(0, 0),
        objects={(1, 3): "tree", (2, 5): "stone", (4, 1): "spade",
                 (3, 2): "coal", (5, 6): "iron ore", (6, 3): "diamond ore",
                 (0, 6): "lumbershop", (3, 4): "workspace", (6, 0): "furnace",
                 (7, 7): "jeweler"},
        terrain={(7, 5): "field"},
        text="place diamond flooring on field, then reach the lumbershop.",
        phrases=[
            "cut wood", "get stone", "get spade", "make stick",
            "make stone pickaxe", "get coal", "get iron ore", "light furnace",
            "smelt iron", "make iron pickaxe", "get diamond ore",
            "place diamond flooring on field", "go to lumbershop",
        ],
    ),
}


@pytest.mark.parametrize("name", sorted(GOLDEN))
def test_golden_transcript(graph, name):
    case = GOLDEN[name]
    m = make_map(case["agent"], case["objects"], case["terrain"])
    roll = _roll(graph, m, case["text"])
    assert roll.outcome == "complete"
    assert roll.phrases() == case["phrases"]


@pytest.mark.parametrize("name", sorted(GOLDEN))
def test_golden_repeatable(graph, name):
    case = GOLDEN[name]
    runs = []
    for _ in range(2):
        m = make_map(case["agent"], case["objects"], case["terrain"])
        roll = _roll(graph, m, case["text"])
        runs.append((roll.phrases(), roll.steps, roll.total_reward,
                     [t.action for t in roll.episode.transitions]))
    assert runs[0] == runs[1]
