"""Command-line surface.

Every subcommand accepts --seed, --config (YAML or JSON file with optional
"mapgen" and "engine" sections), and --out. Output artifacts embed the
engine version and a digest of the effective config. Failures print one
JSON object on stderr and exit nonzero.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import random
import shlex
import sys
from typing import Optional

import yaml

from . import ENGINE_VERSION
from .graph import default_graph
from .grid import GridMap
from .harness import render_report, report_json, run_eval
from .hashutil import config_digest, derive_seed
from .lang import parse_description
from .mapgen import MapGenConfig, generate, generate_feasible
from .oracle import rollout
from .records import export_dataset, record_from_rollout
from .splits import SPLIT_BUILDERS, SplitManifest, audit_split, build_split, goal_key
from .tasks import (ConstraintSet, Task, constraint_sets, enumerate_end_goals,
                    enumerate_tasks, universe_census, validation_task)


def _load_config(path: Optional[str]) -> dict:
    if not path or path == "default":
        return {}
    with open(path, "r", encoding="utf-8") as fh:
        data = yaml.safe_load(fh)
    if data is None:
        return {}
    if not isinstance(data, dict):
        raise ValueError("config file must hold a mapping")
    return data


def _mapgen_config(data: dict) -> MapGenConfig:
    section = data.get("mapgen", {})
    known = {f.name for f in dataclasses.fields(MapGenConfig)}
    bad = set(section) - known
    if bad:
        raise ValueError(f"unknown mapgen config keys: {sorted(bad)}")
    if "counts" in section:
        section = dict(section)
        section["counts"] = {k: tuple(v) for k, v in section["counts"].items()}
    if "patch_range" in section:
        section["patch_range"] = tuple(section["patch_range"])
    if "blob_range" in section:
        section["blob_range"] = tuple(section["blob_range"])
    return MapGenConfig(**section)


def _engine_config(data: dict) -> Optional[dict]:
    return data.get("engine") or None


def _digest(data: dict) -> str:
    graph = default_graph()
    return config_digest({"world": graph.raw, "overrides": data})


def _emit(args, payload: dict) -> None:
    text = json.dumps(payload, sort_keys=True, indent=2, ensure_ascii=False) + "\n"
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _artifact(args, data: dict, body: dict) -> dict:
    return {"engine_version": ENGINE_VERSION, "config_digest": _digest(data), **body}


def _select_tasks(graph, args, data: dict) -> list[Task]:
    """Tasks for eval/export: explicit texts, a manifest part, or a sample."""
    if getattr(args, "task", None):
        return [parse_description(graph, t) for t in args.task]
    universe = enumerate_tasks(graph)
    if getattr(args, "manifest", None):
        manifest = SplitManifest.from_json(
            open(args.manifest, "r", encoding="utf-8").read())
        part = getattr(args, "part", "test")
        wanted = set(manifest.test if part == "test" else manifest.train)
        universe = [t for t in universe
                    if goal_key(graph, t.goal) in wanted]
    limit = getattr(args, "limit", None)
    if limit is not None and limit < len(universe):
        rng = random.Random(derive_seed("task-sample", str(args.seed)))
        universe = sorted(universe, key=lambda t: t.task_id(graph))
        universe = rng.sample(universe, limit)
        universe.sort(key=lambda t: t.task_id(graph))
    return universe


# -- subcommands -----------------------------------------------------------------


def cmd_map_gen(args) -> int:
    data = _load_config(args.config)
    graph = default_graph()
    cfg = _mapgen_config(data)
    if args.task:
        task = parse_description(graph, args.task[0])
        m = generate_feasible(cfg, task, args.seed, graph, mode=args.mode)
    else:
        m = generate(cfg, args.seed, graph)
    _emit(args, _artifact(args, data, {"seed": args.seed, "map": m.to_dict()}))
    return 0


def cmd_tasks_enumerate(args) -> int:
    data = _load_config(args.config)
    graph = default_graph()
    census = universe_census(graph)
    body: dict = {"census": census}
    if args.full:
        rows = []
        for goal in enumerate_end_goals(graph):
            for cs in constraint_sets(graph, goal):
                task = Task(goal=goal, constraints=cs)
                rows.append({"task_id": task.task_id(graph),
                             "goal_id": task.goal_id(graph),
                             "category": goal.category,
                             "constraints": cs.category,
                             "text": task.text(graph)})
            v = validation_task(graph, goal)
            rows.append({"task_id": v.task_id(graph),
                         "goal_id": v.goal_id(graph),
                         "category": goal.category,
                         "constraints": "validation",
                         "text": v.text(graph)})
        body["tasks"] = rows
    _emit(args, _artifact(args, data, body))
    return 0


def cmd_splits_build(args) -> int:
    data = _load_config(args.config)
    graph = default_graph()
    kwargs = {}
    if args.name == "length":
        kwargs["workers"] = args.workers
    manifest = build_split(args.name, graph, **kwargs)
    problems = audit_split(manifest, graph) if args.audit else []
    text = manifest.to_json()
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    if problems:
        raise RuntimeError(f"split audit failed: {problems[:5]}")
    return 0


def cmd_oracle_rollout(args) -> int:
    data = _load_config(args.config)
    graph = default_graph()
    task = parse_description(graph, args.task_text)
    cfg = _mapgen_config(data)
    if args.map:
        with open(args.map, "r", encoding="utf-8") as fh:
            m = GridMap.from_dict(json.load(fh)["map"])
        roll = rollout(graph, task, m, mode=args.mode,
                       config=_engine_config(data))
    else:
        _, roll = generate_feasible(cfg, task, args.seed, graph,
                                    mode=args.mode, return_rollout=True)
    _emit(args, _artifact(args, data, {"record": record_from_rollout(graph, roll)}))
    return 0


def cmd_dataset_export(args) -> int:
    data = _load_config(args.config)
    graph = default_graph()
    tasks = _select_tasks(graph, args, data)
    if not args.out:
        raise ValueError("dataset export requires --out")
    summary = export_dataset(graph, tasks, args.demos, args.seed, args.out,
                             mode=args.mode, config=_mapgen_config(data))
    sys.stdout.write(json.dumps(
        {"engine_version": ENGINE_VERSION, "config_digest": _digest(data),
         "written": summary["written"], "skipped": len(summary["skipped"])},
        sort_keys=True) + "\n")
    return 0


def cmd_eval_run(args) -> int:
    data = _load_config(args.config)
    graph = default_graph()
    tasks = _select_tasks(graph, args, data)
    report = run_eval(graph, tasks, args.scenario, shlex.split(args.agent_cmd),
                      args.seed, max_instances=args.max_instances,
                      mapgen=_mapgen_config(data), timeout=args.timeout,
                      config=_engine_config(data))
    text = report_json(report)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    sys.stdout.write(render_report(report))
    return 0


def cmd_conformance_report(args) -> int:
    data = _load_config(args.config)
    graph = default_graph()
    checks: list[dict] = []

    def check(name: str, ok: bool, detail: str = "") -> None:
        checks.append({"name": name, "pass": bool(ok), "detail": detail})

    check("structures=13", len(graph.structures) == 13,
          f"got {len(graph.structures)}")
    check("placeable_terrains=7", len(graph.placeable_terrains) == 7,
          f"got {len(graph.placeable_terrains)}")
    check("natural_terrains=3", len(graph.natural_terrains) == 3,
          f"got {len(graph.natural_terrains)}")
    check("actions=14", len(graph.actions) == 14, f"got {len(graph.actions)}")
    check("subtasks=56", len(graph.canonical_order) == 56,
          f"got {len(graph.canonical_order)}")

    audit = graph.audit_recipes()
    check("recipe_audit", not audit["errors"],
          f"populated={audit['populated']} blanks={audit['blanks']} "
          f"errors={audit['errors'][:3]}")

    census = universe_census(graph)
    for key, target in (("total", 2651), ("tasks", 10604)):
        got = census[key]
        delta = abs(got - target) / target
        check(f"census_{key}={target}", delta <= 0.10,
              f"got {got} (delta {delta:.2%})")
    check("census_exact",
          census["total"] == 2651 and census["tasks"] == 10604,
          json.dumps(census, sort_keys=True))

    names = list(SPLIT_BUILDERS) if args.full else \
        [n for n in SPLIT_BUILDERS if n != "length"]
    for name in names:
        kwargs = {"workers": args.workers} if name == "length" else {}
        manifest = build_split(name, graph, **kwargs)
        problems = audit_split(manifest, graph)
        check(f"split_{name}", not problems, "; ".join(problems[:3]))

    ok = all(c["pass"] for c in checks)
    _emit(args, _artifact(args, data, {"pass": ok, "checks": checks}))
    return 0 if ok else 1


def cmd_agent(args) -> int:
    # imported lazily so agent startup stays quick
    from .agents import run_description_follower, run_oracle_agent
    if args.kind == "oracle":
        run_oracle_agent()
    else:
        run_description_follower()
    return 0


def cmd_serve(args) -> int:
    from .serve import serve_stdio
    data = _load_config(args.config)
    serve_stdio(engine_config=_engine_config(data),
                mapgen=_mapgen_config(data))
    return 0


# -- parser ----------------------------------------------------------------------


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--config", default=None,
                   help="YAML/JSON file with mapgen/engine sections")
    p.add_argument("--out", default=None, help="output file (default stdout)")


def build_parser() -> argparse.ArgumentParser:
    root = argparse.ArgumentParser(prog="describeworld")
    root.add_argument("--version", action="version", version=ENGINE_VERSION)
    top = root.add_subparsers(dest="group", required=True)

    p = top.add_parser("map").add_subparsers(dest="sub", required=True) \
        .add_parser("gen", help="generate one map")
    _common(p)
    p.add_argument("--task", action="append",
                   help="require feasibility for this task text")
    p.add_argument("--mode", default="demonstration",
                   choices=("expert", "demonstration"))
    p.set_defaults(fn=cmd_map_gen)

    p = top.add_parser("tasks").add_subparsers(dest="sub", required=True) \
        .add_parser("enumerate", help="census and optional full task list")
    _common(p)
    p.add_argument("--full", action="store_true", help="include every task row")
    p.set_defaults(fn=cmd_tasks_enumerate)

    p = top.add_parser("splits").add_subparsers(dest="sub", required=True) \
        .add_parser("build", help="build a split manifest")
    p.add_argument("name", choices=sorted(SPLIT_BUILDERS))
    _common(p)
    p.add_argument("--workers", type=int, default=None,
                   help="processes for length-split rollouts (0 = serial)")
    p.add_argument("--audit", action="store_true",
                   help="re-check membership after building")
    p.set_defaults(fn=cmd_splits_build)

    p = top.add_parser("oracle").add_subparsers(dest="sub", required=True) \
        .add_parser("rollout", help="expert rollout on a generated or given map")
    _common(p)
    p.add_argument("--task-text", required=True)
    p.add_argument("--mode", default="expert",
                   choices=("expert", "demonstration"))
    p.add_argument("--map", default=None, help="map artifact from `map gen`")
    p.set_defaults(fn=cmd_oracle_rollout)

    p = top.add_parser("dataset").add_subparsers(dest="sub", required=True) \
        .add_parser("export", help="export demonstration records")
    _common(p)
    p.add_argument("--demos", type=int, default=1, help="records per task")
    p.add_argument("--mode", default="demonstration",
                   choices=("expert", "demonstration"))
    p.add_argument("--manifest", default=None, help="split manifest file")
    p.add_argument("--part", default="train", choices=("train", "test"))
    p.add_argument("--limit", type=int, default=None)
    p.add_argument("--task", action="append", help="explicit task text")
    p.set_defaults(fn=cmd_dataset_export)

    p = top.add_parser("eval").add_subparsers(dest="sub", required=True) \
        .add_parser("run", help="evaluate an external agent command")
    _common(p)
    p.add_argument("--scenario", required=True,
                   choices=("demonstration", "description", "instruction"))
    p.add_argument("--agent-cmd", required=True,
                   help="agent launch command, shell-quoted")
    p.add_argument("--manifest", default=None)
    p.add_argument("--part", default="test", choices=("train", "test"))
    p.add_argument("--limit", type=int, default=None, help="task sample size")
    p.add_argument("--task", action="append", help="explicit task text")
    p.add_argument("--max-instances", type=int, default=None)
    p.add_argument("--timeout", type=float, default=5.0,
                   help="per-reply agent timeout, seconds")
    p.set_defaults(fn=cmd_eval_run)

    p = top.add_parser("conformance").add_subparsers(dest="sub", required=True) \
        .add_parser("report", help="pass/fail checks of counts and split rules")
    _common(p)
    p.add_argument("--full", action="store_true",
                   help="include the length split (slow)")
    p.add_argument("--workers", type=int, default=None)
    p.set_defaults(fn=cmd_conformance_report)

    p = top.add_parser("agent", help="run a built-in agent over stdio")
    p.add_argument("kind", choices=("oracle", "follower"))
    _common(p)
    p.set_defaults(fn=cmd_agent)

    p = top.add_parser("serve", help="engine request server over stdio")
    _common(p)
    p.set_defaults(fn=cmd_serve)

    return root


def main(argv: Optional[list[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except BrokenPipeError:
        return 0
    except Exception as exc:
        sys.stderr.write(json.dumps(
            {"error": type(exc).__name__, "message": str(exc)},
            ensure_ascii=False, sort_keys=True) + "\n")
        return 1


if __name__ == "__main__":
    sys.exit(main())
