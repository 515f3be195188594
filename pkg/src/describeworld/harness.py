"""Evaluation harness: instances, episode drivers, metrics, reports.

Each task is evaluated on 15 instances: 5 demonstration maps, each paired
with 3 fresh replication maps where the agent actually plays. The agent is
an external process speaking the line protocol; scenarios differ only in
the payload it receives (demonstration transitions, the gold description,
or a per-step instruction stream) and never leak the other surfaces.

Reports are plain dicts with rounded numbers and sorted rows, so the same
inputs always serialize to the same bytes.
"""

from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass, field
from typing import Optional, Sequence

from . import ENGINE_VERSION
from .errors import InfeasibleMapError, ProtocolError
from .graph import WorldGraph, default_graph
from .grid import GridMap
from .hashutil import config_digest, derive_seed
from .lang import em_description, em_instructions, instruction_text
from .mapgen import MapGenConfig, generate_feasible
from .oracle import next_leg
from .protocol import PROTOCOL_VERSION, AgentProcess
from .tasks import Task
from .world import OUTCOME_COMPLETE, Episode

SCENARIOS = ("demonstration", "description", "instruction")

DEMO_MAPS_PER_TASK = 5
REPS_PER_DEMO = 3

GOAL_CATEGORIES = ("navigation", "crafting", "craft_then_nav",
                   "build_on_terrain", "cover_terrain", "clear_items")

_ATOM_CATEGORY = {"subtask": "crafting", "build_on": "build_on_terrain",
                  "cover": "cover_terrain", "clear": "clear_items"}


def goal_category(task: Task) -> str:
    """Report row for a task; two-atom goals follow their first atom."""
    goal = task.goal
    if not goal.atoms:
        return "navigation"
    if goal.landmark is not None:
        return "craft_then_nav"
    return _ATOM_CATEGORY[goal.atoms[0].kind]


# -- instances -------------------------------------------------------------------


@dataclass(frozen=True)
class EvalInstance:
    task: Task
    demo_index: int
    rep_index: int
    demo_seed: int
    rep_seed: int
    demo_payload: dict     # map + action/reward transitions, no text
    rep_map: dict


def build_eval_instances(graph: WorldGraph, task: Task, base_seed: int,
                         config: Optional[MapGenConfig] = None) -> list[EvalInstance]:
    """The 15 evaluation instances of one task, deterministic in base_seed."""
    cfg = config or MapGenConfig()
    task_key = task.task_id(graph)
    out: list[EvalInstance] = []
    for i in range(DEMO_MAPS_PER_TASK):
        demo_seed = derive_seed("eval-demo", task_key, str(base_seed), str(i))
        demo_map, demo_roll = generate_feasible(
            cfg, task, demo_seed, graph, mode="demonstration", return_rollout=True)
        payload = {
            "map": demo_map.to_dict(),
            "mode": "demonstration",
            "transitions": [{"action": t.action, "reward": t.reward}
                            for t in demo_roll.episode.transitions],
        }
        for j in range(REPS_PER_DEMO):
            rep_seed = derive_seed("eval-rep", task_key, str(base_seed),
                                   str(i), str(j))
            rep_map = generate_feasible(cfg, task, rep_seed, graph, mode="expert")
            out.append(EvalInstance(
                task=task, demo_index=i, rep_index=j,
                demo_seed=demo_seed, rep_seed=rep_seed,
                demo_payload=payload, rep_map=rep_map.to_dict()))
    return out


# -- episode driver --------------------------------------------------------------


@dataclass
class EpisodeResult:
    task_id: str
    goal_id: str
    category: str
    constraint_category: str
    scenario: str
    demo_index: int
    rep_index: int
    completed: bool = False
    outcome: str = "aborted"
    steps: int = 0
    total_reward: int = 0
    traversals: dict = field(default_factory=dict)
    flags: tuple = ()
    predicted_description: Optional[str] = None
    predicted_instructions: tuple = ()
    gold_description: str = ""
    gold_instructions: tuple = ()

    def row(self) -> dict:
        em: dict = {}
        if self.scenario == "demonstration":
            em = em_description(self.predicted_description or "",
                                self.gold_description)
        elif self.scenario == "instruction":
            em = em_instructions(list(self.predicted_instructions),
                                 list(self.gold_instructions))
        return {
            "task_id": self.task_id,
            "goal_id": self.goal_id,
            "category": self.category,
            "constraint_category": self.constraint_category,
            "demo_index": self.demo_index,
            "rep_index": self.rep_index,
            "completed": self.completed,
            "outcome": self.outcome,
            "steps": self.steps,
            "total_reward": self.total_reward,
            "traversals": dict(sorted(self.traversals.items())),
            "flags": sorted(self.flags),
            "em": {k: bool(v) for k, v in sorted(em.items())},
        }


def _flag_for(exc: ProtocolError) -> str:
    return "timeout" if "timed out" in str(exc) else "protocol_violation"


def run_episode(graph: WorldGraph, agent: AgentProcess, scenario: str,
                instance: EvalInstance,
                config: Optional[dict] = None) -> EpisodeResult:
    """Drive one episode over the wire; scored incomplete on any violation."""
    if scenario not in SCENARIOS:
        raise ValueError(f"unknown scenario {scenario!r}")
    task = instance.task
    ep = Episode(task, GridMap.from_dict(instance.rep_map), graph, config)
    result = EpisodeResult(
        task_id=task.task_id(graph), goal_id=task.goal_id(graph),
        category=goal_category(task),
        constraint_category=task.constraints.category,
        scenario=scenario, demo_index=instance.demo_index,
        rep_index=instance.rep_index,
        gold_description=task.text(graph))

    if scenario == "demonstration":
        payload: dict = {"demo": instance.demo_payload}
    elif scenario == "description":
        payload = {"description": task.text(graph)}
    else:
        payload = {}

    flags: set[str] = set()
    predicted_instructions: list[str] = []
    gold_instructions: list[str] = []
    current_instruction: Optional[str] = None
    try:
        agent.send({"type": "hello", "protocol": PROTOCOL_VERSION,
                    "scenario": scenario, "payload": payload,
                    "engine_version": ENGINE_VERSION, "config": ep.config})
        ready = agent.recv()
        if ready.get("type") != "ready":
            flags.add("protocol_violation")
    except ProtocolError as exc:
        flags.add(_flag_for(exc))

    reward_last = 0
    budget = ep.config["max_steps"] * 8 + 64
    while not ep.done and not flags:
        budget -= 1
        if budget < 0:
            flags.add("protocol_violation")
            break
        if scenario == "instruction":
            leg = next_leg(graph, ep, task)
            if leg is not None:
                text = instruction_text(graph, leg.subtask, leg.qualifier,
                                        task.constraints)
                if text != current_instruction:
                    gold_instructions.append(text)
                current_instruction = text
        obs = {"type": "obs", "step": ep.steps,
               "observation": ep.map.observation(graph).tolist(),
               "inventory": ep.inventory_text(),
               "reward": reward_last}
        if scenario == "instruction" and current_instruction is not None:
            obs["instruction"] = current_instruction
        try:
            agent.send(obs)
            msg = agent.recv()
        except ProtocolError as exc:
            flags.add(_flag_for(exc))
            break
        kind = msg.get("type")
        if kind == "predict":
            if "description" in msg:
                result.predicted_description = str(msg["description"])
            if "instruction" in msg:
                predicted_instructions.append(str(msg["instruction"]))
            continue
        if kind != "act" or msg.get("action") not in graph.actions:
            flags.add("agent_error" if kind == "error" else "protocol_violation")
            break
        tr = ep.step(msg["action"])
        reward_last = tr.reward

    try:
        agent.send({"type": "end", "outcome": ep.outcome or "aborted",
                    "steps": ep.steps, "reward": ep.total_reward})
    except ProtocolError:
        flags.add("protocol_violation")

    result.completed = ep.outcome == OUTCOME_COMPLETE and not flags
    result.outcome = ep.outcome or "aborted"
    result.steps = ep.steps
    result.total_reward = ep.total_reward
    result.traversals = dict(ep.traversal_counts)
    result.flags = tuple(sorted(flags))
    result.predicted_instructions = tuple(predicted_instructions)
    result.gold_instructions = tuple(gold_instructions)
    return result


# -- aggregation -----------------------------------------------------------------


def _pct(k: int, n: int) -> float:
    return round(100.0 * k / n, 2) if n else 0.0


def _mean(values: Sequence[float]) -> float:
    return round(sum(values) / len(values), 4) if values else 0.0


def build_report(scenario: str, results: Sequence[EpisodeResult], *,
                 seed: int, config_data=None, skipped: Sequence[dict] = ()) -> dict:
    """Aggregate episode results into a deterministic report dict."""
    rows = sorted((r.row() for r in results),
                  key=lambda r: (r["task_id"], r["demo_index"], r["rep_index"]))

    by_cat: dict[str, list[dict]] = {}
    for row in rows:
        by_cat.setdefault(row["category"], []).append(row)
    completion = {
        cat: {"instances": len(items),
              "completed": sum(r["completed"] for r in items),
              "pct": _pct(sum(r["completed"] for r in items), len(items))}
        for cat, items in sorted(by_cat.items())
    }

    by_cons: dict[str, list[dict]] = {}
    for row in rows:
        by_cons.setdefault(row["constraint_category"], []).append(row)
    traversal = {
        cat: {"episodes": len(items),
              "reward_mean": _mean([r["traversals"].get("reward", 0) for r in items]),
              "penalty_mean": _mean([r["traversals"].get("penalty", 0) for r in items])}
        for cat, items in sorted(by_cons.items())
    }

    report = {
        "schema_version": 1,
        "engine_version": ENGINE_VERSION,
        "protocol_version": PROTOCOL_VERSION,
        "scenario": scenario,
        "seed": seed,
        "config_digest": config_digest(config_data if config_data is not None else {}),
        "n_tasks": len({r["task_id"] for r in rows}),
        "n_instances": len(rows),
        "completion": completion,
        "overall_pct": _pct(sum(r["completed"] for r in rows), len(rows)),
        "traversal": traversal,
        "flags": dict(sorted(Counter(
            f for r in rows for f in r["flags"]).items())),
        "skipped": sorted(skipped, key=lambda s: s.get("task_id", "")),
        "results": rows,
    }
    if scenario == "demonstration":
        report["describer_em"] = {
            "episodes": len(rows),
            "full_pct": _pct(sum(r["em"].get("full", False) for r in rows), len(rows)),
            "goal_pct": _pct(sum(r["em"].get("goal", False) for r in rows), len(rows)),
        }
    if scenario == "instruction":
        report["instructor_em"] = {
            "episodes": len(rows),
            "all_pct": _pct(sum(r["em"].get("all", False) for r in rows), len(rows)),
            "last_pct": _pct(sum(r["em"].get("last", False) for r in rows), len(rows)),
        }
    return report


def report_json(report: dict) -> str:
    return json.dumps(report, sort_keys=True, indent=2, ensure_ascii=False) + "\n"


def render_report(report: dict) -> str:
    """Fixed-width text rendering of the report tables."""
    lines = [
        f"scenario: {report['scenario']}   seed: {report['seed']}   "
        f"engine: {report['engine_version']}",
        f"tasks: {report['n_tasks']}   instances: {report['n_instances']}   "
        f"overall completion: {report['overall_pct']:.2f}%",
        "",
        f"{'category':<18}{'instances':>10}{'completed':>10}{'pct':>8}",
    ]
    for cat, row in report["completion"].items():
        lines.append(f"{cat:<18}{row['instances']:>10}{row['completed']:>10}"
                     f"{row['pct']:>8.2f}")
    lines += ["", f"{'constraints':<12}{'episodes':>9}{'reward+':>9}{'penalty-':>9}"]
    for cat, row in report["traversal"].items():
        lines.append(f"{cat:<12}{row['episodes']:>9}{row['reward_mean']:>9.4f}"
                     f"{row['penalty_mean']:>9.4f}")
    if "describer_em" in report:
        em = report["describer_em"]
        lines += ["", f"describer EM  full: {em['full_pct']:.2f}%   "
                      f"goal: {em['goal_pct']:.2f}%"]
    if "instructor_em" in report:
        em = report["instructor_em"]
        lines += ["", f"instructor EM  all: {em['all_pct']:.2f}%   "
                      f"last: {em['last_pct']:.2f}%"]
    if report["flags"]:
        lines += ["", "flags: " + ", ".join(
            f"{k}={v}" for k, v in report["flags"].items())]
    return "\n".join(lines) + "\n"


# -- full runs -------------------------------------------------------------------


def run_eval(graph: Optional[WorldGraph], tasks: Sequence[Task], scenario: str,
             agent_cmd: list[str], base_seed: int, *,
             max_instances: Optional[int] = None,
             mapgen: Optional[MapGenConfig] = None,
             timeout: float = 5.0,
             config: Optional[dict] = None) -> dict:
    """Evaluate one agent command over the given tasks; returns the report."""
    graph = graph or default_graph()
    instances: list[EvalInstance] = []
    skipped: list[dict] = []
    for task in tasks:
        try:
            instances.extend(build_eval_instances(graph, task, base_seed, mapgen))
        except InfeasibleMapError as exc:
            skipped.append({"task_id": task.task_id(graph), "reason": str(exc)})
    if max_instances is not None:
        instances = instances[:max_instances]

    results: list[EpisodeResult] = []
    agent = AgentProcess(agent_cmd, timeout=timeout)
    agent.start()
    try:
        for instance in instances:
            res = run_episode(graph, agent, scenario, instance, config)
            results.append(res)
            if res.flags:
                # connection state is suspect after a violation; start fresh
                agent.close()
                agent.start()
    finally:
        try:
            if agent.alive:
                agent.send({"type": "bye"})
        except ProtocolError:
            pass
        agent.close()

    cfg_data = {"mapgen": (mapgen or MapGenConfig()).__dict__,
                "engine": config or {}}
    cfg_data["mapgen"] = {k: (dict(v) if isinstance(v, dict) else v)
                          for k, v in cfg_data["mapgen"].items()}
    return build_report(scenario, results, seed=base_seed,
                        config_data=json.loads(json.dumps(cfg_data, sort_keys=True, default=str)),
                        skipped=skipped)
