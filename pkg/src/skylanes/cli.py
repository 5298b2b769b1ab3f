"""Command-line entry points.

    skylanes run <scenario.json> [--seed N] [--rollouts N] [--dmax N]
                 [--dt S] [--cadence S] [--serve PORT] [--auto-approve]
                 [--out DIR]
    skylanes verify <scenario.json>      one-shot plan + resolve, prints the
                                         safety record and decision trace
    skylanes replay <episode.log>        re-run a logged episode and check
                                         the content hash
    skylanes lanes <scenario.json>       emit the lane polylines as JSON

Exit codes: 0 clean episode, 2 fallback occurred, 1 error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .conflict import detect, earliest_conflict
from .events import EventLog
from .resolver import resolve_airspace
from .runner import Episode, run_episode
from .scenario import Scenario, ScenarioError, load_scenario, parse_scenario
from .serialize import encode_tsr
from .twin import simulate_ensemble


def _apply_overrides(doc: dict, args) -> dict:
    doc = json.loads(json.dumps(doc))  # deep copy
    if args.seed is not None:
        doc["seed"] = args.seed
    if args.rollouts is not None:
        doc.setdefault("perturbation", {})["count"] = args.rollouts
    if args.dmax is not None:
        doc.setdefault("search", {})["max_depth"] = args.dmax
    if args.dt is not None:
        doc["dt_s"] = args.dt
    if args.cadence is not None:
        doc["cadence_s"] = args.cadence
    return doc


def _write_outputs(result, out_dir: str) -> None:
    from .twin import export_trajectories

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    result.log.write(out / "episode.log")
    (out / "metrics.json").write_text(
        json.dumps(result.metrics.to_json(), indent=2) + "\n"
    )
    (out / "report.txt").write_text(result.report + "\n")
    export_trajectories(result.truth_trajectories, out / "trajectories.jsonl")
    print(f"wrote {out / 'episode.log'}, metrics.json, report.txt, "
          f"trajectories.jsonl")


def cmd_run(args) -> int:
    scenario = load_scenario(args.scenario)
    doc = _apply_overrides(scenario.raw, args)
    scenario = parse_scenario(doc, where=str(args.scenario))

    if args.serve is not None:
        from .gateway import serve

        serve(scenario, port=args.serve, auto_approve=args.auto_approve)
        return 0

    result = run_episode(scenario, mode="headless", auto_approve=True)
    print(result.report)
    print(f"log hash: {result.log.content_hash()}")
    if args.out:
        _write_outputs(result, args.out)
    return result.exit_code


def cmd_verify(args) -> int:
    scenario = load_scenario(args.scenario)
    episode = Episode(scenario, auto_approve=True)
    episode._plan_arrivals()
    if not episode.plan.plans:
        print("no aircraft to verify")
        return 0
    bundle = episode.truth.start_bundle()
    rollouts = simulate_ensemble(
        episode.plan, bundle, scenario.airspace, scenario.ensemble,
        lateral_minimum_nm=scenario.minima.lateral_nm,
    )
    tsr = detect(rollouts, scenario.minima, scenario.thresholds)
    print(f"plan revision {episode.plan.revision}: "
          f"{len(tsr)} predicted conflict record(s)")
    for rec in tsr.records:
        print(
            f"  {rec.pair[0]} / {rec.pair[1]}  t_first={rec.t_first_s:.0f}s  "
            f"cpa={rec.cpa_distance_nm:.2f}NM@{rec.cpa_time_s:.0f}s  "
            f"class={rec.conflict_class}  source={rec.source}"
        )
    if tsr.empty:
        print("plan is safe across the full ensemble")
        return 0

    res = resolve_airspace(
        episode.plan, bundle, scenario.airspace, scenario.ensemble,
        scenario.minima, scenario.thresholds, scenario.search,
    )
    print(f"resolution outcome: {res.outcome}")
    print(f"  expansions={res.stats.expansions} ensembles={res.stats.simulations} "
          f"rollouts={res.stats.rollouts}")
    for k, attempt in enumerate(res.trace.accepted_path()):
        print(f"  applied[{k}]: {attempt.label}")
    if res.alert:
        print(f"  alert: {res.alert}")
    print("decision trace:")
    for node in res.trace.nodes:
        pad = "  " * (node.depth + 1)
        conflict = ""
        if node.conflict:
            conflict = (f" conflict {node.conflict['pair']} "
                        f"t={node.conflict['t_first_s']:.0f}s "
                        f"{tuple(node.conflict['class'])}")
        print(f"{pad}node {node.node_id} d={node.depth} "
              f"tsr={node.tsr_size}{conflict} -> {node.outcome}")
        for a in node.attempts:
            print(f"{pad}  - {a.label}: {a.outcome}")
    return 0 if res.solved else 2


def cmd_replay(args) -> int:
    from .runner import replay_episode

    header, records = EventLog.read(args.log)
    result, matched = replay_episode(records)
    expected = header.get("content_hash")
    print(f"logged hash:   {expected}")
    print(f"replayed hash: {result.log.content_hash()}")
    if not matched or result.log.content_hash() != expected:
        print("REPLAY MISMATCH")
        return 1
    print("replay reproduces the event log exactly")
    return result.exit_code


def cmd_lanes(args) -> int:
    scenario = load_scenario(args.scenario)
    out = {}
    for (route_id, desig), lane in sorted(scenario.airspace.lanes.items(),
                                          key=lambda kv: (kv[0][0], kv[0][1].value)):
        out.setdefault(route_id, {})[desig.value] = [
            [round(x, 6), round(y, 6)] for x, y in lane.polyline
        ]
    print(json.dumps({"lane_offset_nm": scenario.airspace.lane_offset_nm,
                      "routes": out}, indent=2))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="skylanes",
        description="lane-based tactical deconfliction, verified by simulation",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="execute a scenario episode")
    p_run.add_argument("scenario")
    p_run.add_argument("--seed", type=int)
    p_run.add_argument("--rollouts", type=int, help="perturbed rollout count")
    p_run.add_argument("--dmax", type=int, help="search depth limit")
    p_run.add_argument("--dt", type=float, help="simulation step seconds")
    p_run.add_argument("--cadence", type=float, help="replanning cadence seconds")
    p_run.add_argument("--serve", type=int, metavar="PORT",
                       help="attach the HMI gateway on this port")
    p_run.add_argument("--auto-approve", action="store_true",
                       help="issue proposed clearances without operator review")
    p_run.add_argument("--out", help="directory for episode.log and metrics")
    p_run.set_defaults(func=cmd_run)

    p_verify = sub.add_parser("verify",
                              help="one-shot plan + resolve, print TSR and trace")
    p_verify.add_argument("scenario")
    p_verify.set_defaults(func=cmd_verify)

    p_replay = sub.add_parser("replay", help="re-run a logged episode")
    p_replay.add_argument("log")
    p_replay.set_defaults(func=cmd_replay)

    p_lanes = sub.add_parser("lanes", help="emit lane polylines for a scenario")
    p_lanes.add_argument("scenario")
    p_lanes.set_defaults(func=cmd_lanes)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ScenarioError as exc:
        print(f"scenario error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # surface everything as exit code 1
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
