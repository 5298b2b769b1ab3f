"""Conflict detection, classification and the backtracking search.

Reconstructs the head-on encounter: two aircraft on reciprocal routes at the
same level. Shows the Technical Safety Record, the causal attribution of
the predicted conflict, the ranked candidate strategies, and the decision
trace of the search that splices the dual same-side lane change.
"""

from pathlib import Path

from skylanes.conflict import detect, earliest_conflict
from skylanes.plans import Axis, filter_by_axis_constraints
from skylanes.resolver import attribute_cause, resolve_airspace
from skylanes.runner import Episode
from skylanes.scenario import load_scenario
from skylanes.strategies import StrategyContext, get_strategies
from skylanes.twin import simulate_ensemble

SCENARIOS = Path(__file__).resolve().parents[1] / "scenarios"


def main():
    scenario = load_scenario(SCENARIOS / "head_on.json")
    episode = Episode(scenario)
    episode._plan_arrivals()
    plan = episode.plan
    bundle = episode.truth.start_bundle()

    rollouts = simulate_ensemble(plan, bundle, scenario.airspace,
                                 scenario.ensemble)
    tsr = detect(rollouts, scenario.minima, scenario.thresholds)
    print(f"technical safety record: {len(tsr)} records across "
          f"{1 + len(rollouts.perturbed) + len(rollouts.counterfactuals)} rollouts")
    conflict = earliest_conflict(tsr)
    print(f"earliest: {conflict.pair[0]}/{conflict.pair[1]} "
          f"t_first={conflict.t_first_s:.0f}s "
          f"cpa={conflict.cpa_distance_nm:.2f} NM at t={conflict.cpa_time_s:.0f}s "
          f"class={conflict.conflict_class} source={conflict.source}")

    attribution = attribute_cause(conflict, plan, rollouts)
    print("\ncausal attribution (active actions at the conflict):")
    for (cs, axis), action_id in sorted(attribution.items()):
        pa = plan.plan_for(cs).find(action_id)
        print(f"  {cs} {axis.value:>8}: {pa.action.phrase()}  [{action_id}]")

    ctx = StrategyContext(conflict, plan, scenario.airspace,
                          {st.callsign: st for st in bundle.states},
                          scenario.minima,
                          scenario.airspace.sector.floor_fl,
                          scenario.airspace.sector.ceiling_fl,
                          attribution=attribution)
    candidates = filter_by_axis_constraints(
        get_strategies(conflict.conflict_class, ctx), plan.constraints,
        conflict.pair)
    print(f"\nranked candidates for {conflict.conflict_class}:")
    for c in candidates:
        print(f"  priority {c.priority}: {c.label()}")

    res = resolve_airspace(plan, bundle, scenario.airspace, scenario.ensemble,
                           scenario.minima, scenario.thresholds,
                           scenario.search)
    print(f"\nsearch outcome: {res.outcome} after {res.stats.expansions} "
          f"expansion(s), {res.stats.simulations} ensemble verification(s)")
    for node in res.trace.nodes:
        pad = "  " * (node.depth + 1)
        print(f"{pad}node {node.node_id} depth={node.depth} "
              f"tsr={node.tsr_size} -> {node.outcome}")
        for a in node.attempts:
            print(f"{pad}  tried {a.label}: {a.outcome}")

    print("\nspliced lateral chains (the rest of each plan is untouched):")
    for cs in conflict.pair:
        before = [pa.action.phrase() for pa in plan.plan_for(cs).chain(Axis.LATERAL)]
        after = [pa.action.phrase() for pa in res.plan.plan_for(cs).chain(Axis.LATERAL)]
        print(f"  {cs}: {before}  ->  {after}")
    print("registered constraints:")
    for c in res.plan.constraints:
        print(f"  {c.callsign} {c.axis.value} locked {c.direction} "
              f"until the pair has passed and opened separation")


if __name__ == "__main__":
    main()
