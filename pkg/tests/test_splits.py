"""Split builders: membership rules, audits, manifest stability.

The length split takes minutes to compute, so its coverage lives in the
acceptance suite; the four combinatorial splits are cheap and exhaustive.
"""

import pytest

from describeworld.splits import (
    SplitManifest,
    audit_split,
    build_split,
    goal_key,
    universe_digest,
)
from describeworld.tasks import enumerate_end_goals

FAST_SPLITS = ("random", "hidden_subtask", "hidden_use_case",
               "hidden_terrain_destination")


def _key_of(graph, sentence):
    for goal in enumerate_end_goals(graph):
        if goal.sentence(graph) == sentence:
            return goal_key(graph, goal)
    raise AssertionError(f"no goal {sentence!r}")


@pytest.fixture(scope="module")
def manifests(graph):
    return {name: build_split(name, graph) for name in FAST_SPLITS}


def test_audits_clean(graph, manifests):
    for name, manifest in manifests.items():
        assert audit_split(manifest, graph) == [], name


def test_manifests_byte_identical(graph, manifests):
    for name, manifest in manifests.items():
        again = build_split(name, graph)
        assert again.to_json() == manifest.to_json(), name


def test_manifest_round_trip(manifests):
    for manifest in manifests.values():
        clone = SplitManifest.from_json(manifest.to_json())
        assert clone.to_json() == manifest.to_json()


def test_manifest_headers(graph, manifests):
    digest = universe_digest(graph)
    for manifest in manifests.values():
        assert manifest.universe == digest
        assert manifest.hash_fn == "blake2b-64"
        assert manifest.engine_version
        assert manifest.config
        assert len(manifest.validation) == len(manifest.train)
        assert not set(manifest.train) & set(manifest.test)


def test_random_ratio(graph, manifests):
    m = manifests["random"]
    total = len(enumerate_end_goals(graph))
    assert len(m.train) + len(m.test) == total
    frac = len(m.train) / total
    assert 0.68 <= frac <= 0.72


def test_hidden_subtask_membership(graph, manifests):
    m = manifests["hidden_subtask"]
    train, test = set(m.train), set(m.test)
    assert _key_of(graph, "build diamond house.") in test
    assert _key_of(graph, "erect pig shrine.") in test
    assert _key_of(graph, "place iron flooring.") in test
    assert _key_of(graph, "reach the jeweler.") in train
    # cover goals touching a held subtask are dropped outright
    dropped = _key_of(graph, "place iron flooring covering all the water.")
    assert dropped not in train and dropped not in test
    assert len(train) + len(test) < len(enumerate_end_goals(graph))


def test_hidden_use_case_membership(graph, manifests):
    m = manifests["hidden_use_case"]
    train, test = set(m.train), set(m.test)
    # plain-only subtasks keep their bare form in train, lose the rest
    assert _key_of(graph, "build diamond house.") in train
    assert _key_of(graph, "place road.") in train
    assert _key_of(graph, "make goldware.") in train
    assert _key_of(graph, "build diamond house on dirt.") in test
    # dest-only subtask: allowed as a destination, held as a goal
    assert _key_of(graph, "place iron flooring.") in test
    assert _key_of(graph, "build fence on iron flooring.") in train


def test_hidden_terrain_destination_membership(graph, manifests):
    m = manifests["hidden_terrain_destination"]
    train, test = set(m.train), set(m.test)
    assert _key_of(graph, "dig dirt on water.") in test
    assert _key_of(graph, "dig dirt covering all the water.") in test
    assert _key_of(graph, "dig dirt on field.") in train
    # water as a traversal constraint is not a destination use
    assert _key_of(graph, "reach the jeweler.") in train
    assert len(train) + len(test) == len(enumerate_end_goals(graph))


def test_unknown_split_name(graph):
    with pytest.raises(KeyError):
        build_split("nope", graph)


def test_audit_catches_tampering(graph, manifests):
    m = SplitManifest.from_json(manifests["hidden_subtask"].to_json())
    moved = m.test.pop()
    m.train.append(moved)
    assert audit_split(m, graph)
