"""Built-in agents that talk the wire protocol over stdio.

The oracle agent covers all three scenarios: it parses gold descriptions,
follows streamed instructions, and for demonstrations infers the task by
replaying the demo and matching candidate goals' simulated expert rollouts
against the demonstrated action sequence.  A separate scripted follower
handles only the description scenario.

Agents keep a local shadow episode (initial map read from the first
observation, advanced with their own actions) so they can plan with the
same machinery as the engine without any private state access.
"""

from __future__ import annotations

import json
from typing import Optional

import numpy as np

from .graph import WorldGraph, default_graph
from .grid import GridMap
from .lang import (Q_DEST, Qualifier, describe_task, parse_description,
                   parse_instruction)
from .oracle import Leg, _step_action, expert_action, leg_targets, rollout, shortest_path
from .protocol import StdioBridge
from .tasks import (ConstraintSet, EndGoal, Task, atom_satisfied,
                    enumerate_end_goals, goal_satisfied)
from .world import Episode


def infer_constraints(graph: WorldGraph, demo: dict) -> ConstraintSet:
    """Read terrain roles off the demo's reward deltas on terrain entries."""
    ep = Episode(None, GridMap.from_dict(demo["map"]), graph)
    step_penalty = ep.config["step_penalty"]
    roles: dict[str, str] = {}
    for step in demo["transitions"]:
        before = ep.map.agent
        ep.step(step["action"])
        if ep.map.agent == before:
            continue
        terrain = ep.map.terrain_at(ep.map.agent)
        if terrain not in graph.natural_terrains:
            continue
        delta = step["reward"] - step_penalty
        if delta >= ep.config["terrain_reward"]:
            roles[terrain] = "reward"
        elif delta <= ep.config["terrain_penalty"]:
            roles[terrain] = "penalty"
        else:
            roles.setdefault(terrain, "neutral")
    return ConstraintSet(
        rewards=tuple(t for t in graph.natural_terrains if roles.get(t) == "reward"),
        penalties=tuple(t for t in graph.natural_terrains if roles.get(t) == "penalty"),
    )


def infer_task(graph: WorldGraph, demo: dict) -> Task:
    """Identify the demonstrated task.

    Constraints come from reward deltas.  The goal is found by filtering end
    goals to those satisfied at the demo's final state, then simulating each
    survivor's expert rollout on the demo map and keeping exact action-sequence
    matches.  Goals with an atom already satisfied before the demo started
    (say, covering a terrain the map never had) explain nothing the expert
    did, so candidates with live atoms outrank them; remaining ties go to
    the smallest goal, then alphabetically.  Surviving ties are mutually
    completion-equivalent by construction.
    """
    constraints = infer_constraints(graph, demo)
    start = GridMap.from_dict(demo["map"])
    final = Episode(None, start.copy(), graph)
    actions = [step["action"] for step in demo["transitions"]]
    for action in actions:
        final.step(action)
    mode = demo.get("mode", "demonstration")
    matches: list[tuple[tuple, EndGoal]] = []
    for goal in enumerate_end_goals(graph):
        if not goal_satisfied(graph, goal, final.map, final.ledger):
            continue
        task = Task(goal=goal, constraints=constraints)
        try:
            sim = rollout(graph, task, GridMap.from_dict(demo["map"]), mode=mode)
        except Exception:
            continue
        if sim.outcome == "complete" \
                and [t.action for t in sim.episode.transitions] == actions:
            vacuous = any(atom_satisfied(graph, a, start, []) for a in goal.atoms)
            rank = (vacuous, len(goal.atoms), goal.landmark is not None,
                    goal.sentence(graph))
            matches.append((rank, goal))
    if not matches:
        raise ValueError("no goal reproduces the demonstration")
    return Task(goal=min(matches)[1], constraints=constraints)


def follow_instruction(graph: WorldGraph, shadow: Episode, text: str) -> str:
    """One action serving the given instruction, from the agent's shadow state."""
    subtask, location, constraints = parse_instruction(graph, text)
    st = graph.subtasks[subtask]
    # the location descriptor doubles as the qualifier for unanchored legs
    qualifier = None
    if st.kind != "goto" and st.at is None and location in graph.terrains:
        qualifier = Qualifier(Q_DEST, location)
    leg = Leg(subtask, qualifier)
    targets = set(leg_targets(graph, shadow, leg))
    if shadow.map.agent in targets:
        if st.kind == "goto":
            return "up"  # arrival ends the episode engine-side; unreachable
        if st.two_step:
            fam = graph.family_of[subtask]
            if shadow.pending is not None and shadow.pending.cell == shadow.map.agent \
                    and shadow.pending.family == fam:
                return st.actions[1]
            return st.actions[0]
        return st.actions[0]
    path = shortest_path(shadow, shadow.map.agent, targets, constraints=constraints)
    if not path:
        return "up"
    return _step_action(shadow.map.agent, path[0])


def _map_from_obs(graph: WorldGraph, observation) -> GridMap:
    return GridMap.from_observation(np.asarray(observation, dtype=np.int32), graph)


class OracleAgent:
    """Self-play reference agent for all three scenarios."""

    name = "oracle"

    def __init__(self, graph: Optional[WorldGraph] = None):
        self.graph = graph or default_graph()
        self._demo_cache: dict[str, Task] = {}

    def run(self, bridge: StdioBridge) -> None:
        while True:
            msg = bridge.recv()
            if msg is None or msg["type"] == "bye":
                return
            if msg["type"] != "hello":
                bridge.send({"type": "error",
                             "message": f"expected hello, got {msg['type']}"})
                continue
            bridge.send({"type": "ready", "name": self.name})
            self._episode(bridge, msg)

    def _resolve_task(self, scenario: str, payload: dict) -> Optional[Task]:
        if scenario == "demonstration":
            # the same demo is replayed against several fresh maps
            key = json.dumps(payload["demo"], sort_keys=True)
            if key not in self._demo_cache:
                self._demo_cache[key] = infer_task(self.graph, payload["demo"])
            return self._demo_cache[key]
        if scenario == "description":
            return parse_description(self.graph, payload["description"])
        return None

    def _episode(self, bridge: StdioBridge, hello: dict) -> None:
        graph = self.graph
        scenario = hello["scenario"]
        task: Optional[Task] = None
        shadow: Optional[Episode] = None
        described = False
        echoed: Optional[str] = None

        while True:
            msg = bridge.recv()
            if msg is None or msg["type"] == "end":
                return
            if msg["type"] != "obs":
                bridge.send({"type": "error", "message": f"unexpected {msg['type']}"})
                return
            if task is None and scenario != "instruction":
                try:
                    task = self._resolve_task(scenario, hello.get("payload", {}))
                except Exception as exc:
                    bridge.send({"type": "error", "message": str(exc)})
                    return
            if shadow is None:
                shadow = Episode(task, _map_from_obs(graph, msg["observation"]), graph)
            if task is not None and not described:
                described = True
                bridge.send({"type": "predict",
                             "description": describe_task(graph, task)})
                continue
            if scenario == "instruction":
                instruction = msg.get("instruction") or ""
                if not instruction:
                    bridge.send({"type": "error", "message": "no instruction in obs"})
                    return
                if instruction != echoed:
                    echoed = instruction
                    bridge.send({"type": "predict", "instruction": instruction})
                    continue
                action = follow_instruction(graph, shadow, instruction)
            else:
                action = expert_action(graph, shadow, task)
            if not shadow.done:
                shadow.step(action)
            bridge.send({"type": "act", "action": action})


class DescriptionFollower:
    """Parse the gold description, then act as the expert for that task."""

    name = "description-follower"

    def __init__(self, graph: Optional[WorldGraph] = None):
        self.graph = graph or default_graph()

    def run(self, bridge: StdioBridge) -> None:
        while True:
            msg = bridge.recv()
            if msg is None or msg["type"] == "bye":
                return
            if msg["type"] != "hello":
                continue
            if msg["scenario"] != "description":
                bridge.send({"type": "error",
                             "message": "this agent only follows descriptions"})
                continue
            bridge.send({"type": "ready", "name": self.name})
            task = parse_description(self.graph, msg["payload"]["description"])
            shadow: Optional[Episode] = None
            while True:
                step = bridge.recv()
                if step is None or step["type"] == "end":
                    break
                if step["type"] != "obs":
                    continue
                if shadow is None:
                    shadow = Episode(
                        task, _map_from_obs(self.graph, step["observation"]),
                        self.graph)
                action = expert_action(self.graph, shadow, task)
                if not shadow.done:
                    shadow.step(action)
                bridge.send({"type": "act", "action": action})


def run_oracle_agent() -> None:
    OracleAgent().run(StdioBridge())


def run_description_follower() -> None:
    DescriptionFollower().run(StdioBridge())
