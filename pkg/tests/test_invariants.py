"""Cross-module invariants that do not belong to a single operation."""

import numpy as np

from skylanes.conflict import SeparationMinima, detect, earliest_conflict
from skylanes.geometry import LaneDesignation, build_lanes
from skylanes.plans import AircraftPassedLaterally, Axis, FlyLane, Immediate, PlannedAction
from skylanes.resolver import resolve_airspace
from skylanes.twin import EnsembleConfig, TwinStart, make_entry_state, simulate, simulate_ensemble

from .conftest import nominal_plan, plan_of, start_of

MINIMA = SeparationMinima()


class TestNominalPlanEfficiency:
    """The descent trigger sits at the latest feasible along-track point."""

    def _exit_altitude(self, corridor, trigger_pad_nm):
        fp = nominal_plan(corridor, "AC1", "EB", 350, 350, 300)
        if trigger_pad_nm:
            from dataclasses import replace

            from skylanes.plans import AtFix

            vert = list(fp.chain(Axis.VERTICAL))
            tod = vert[1].trigger
            later = AtFix(tod.fix_id, tod.tolerance_nm - trigger_pad_nm)
            vert[0] = replace(vert[0], completion=later)
            vert[1] = replace(vert[1], trigger=later)
            fp = fp.with_chain(Axis.VERTICAL, vert)
        plan = plan_of(fp)
        start = start_of(corridor, plan, speeds={"AC1": (350, 480.0)})
        result = simulate(plan, start, corridor, horizon_s=1500.0)
        _, _, alt = result.exits[0]
        return alt

    def test_exact_trigger_meets_exit_level(self, corridor):
        alt = self._exit_altitude(corridor, trigger_pad_nm=0.0)
        # at most one discrete step of trigger lateness: 5 s at 2000 ft/min
        assert alt - 30000.0 <= 2000.0 * 5.0 / 60.0 + 1e-6

    def test_any_later_trigger_misses_the_exit_level(self, corridor):
        alt = self._exit_altitude(corridor, trigger_pad_nm=3.0)
        # 3 NM late at 480 kt and 2000 ft/min leaves ~750 ft unflown
        assert alt - 30000.0 > 300.0


class TestCpaLowerBoundsDetection:
    def test_cpa_is_the_interval_minimum(self, corridor):
        p1 = nominal_plan(corridor, "AC1", "EB", 330, 330, 330)
        p2 = nominal_plan(corridor, "AC2", "WB", 330, 330, 330)
        plan = plan_of(p1, p2)
        start = start_of(corridor, plan,
                         speeds={"AC1": (330, 480.0), "AC2": (330, 480.0)})
        rollouts = simulate_ensemble(
            plan, start, corridor,
            EnsembleConfig(n_perturbed=2, seed=8, horizon_s=1500.0))
        tsr = detect(rollouts, MINIMA)
        rec = earliest_conflict(tsr)
        rollout = rollouts.nominal if rec.source.kind == "nominal" else \
            rollouts.perturbed[int(rec.source.key)]
        a = rollout.trajectories["AC1"]
        b = rollout.trajectories["AC2"]
        for k, t in enumerate(a.times):
            if rec.t_first_s <= t <= rec.t_last_s:
                d = float(np.hypot(a.x[k] - b.x[k], a.y[k] - b.y[k]))
                assert rec.cpa_distance_nm <= d + 1e-9


class TestLaneSpacingSafetyTheorem:
    """Aircraft confined to 7 NM-spaced lanes never lose lateral separation."""

    def test_randomized_rollouts(self, corridor):
        rng = np.random.default_rng(1234)
        for trial in range(25):
            gs1 = float(rng.uniform(300, 600))
            gs2 = float(rng.uniform(300, 600))
            s1 = float(rng.uniform(0, 60))
            s2 = float(rng.uniform(0, 60))
            fp1 = nominal_plan(corridor, "L1", "EB", 330, 330, 330, gs_kt=gs1)
            fp2 = nominal_plan(corridor, "R1", "EB", 330, 330, 330, gs_kt=gs2)
            lat1 = [PlannedAction("L1-off", Immediate(),
                                  FlyLane("EB", LaneDesignation.LEFT),
                                  AircraftPassedLaterally("R1"),
                                  provenance="test")] + list(fp1.chain(Axis.LATERAL))[1:]
            lat2 = [PlannedAction("R1-off", Immediate(),
                                  FlyLane("EB", LaneDesignation.RIGHT),
                                  AircraftPassedLaterally("L1"),
                                  provenance="test")] + list(fp2.chain(Axis.LATERAL))[1:]
            fp1 = fp1.with_chain(Axis.LATERAL, lat1)
            fp2 = fp2.with_chain(Axis.LATERAL, lat2)
            plan = plan_of(fp1, fp2)
            start = TwinStart(0.0, (
                make_entry_state("L1", corridor, "EB", 330, gs1, s_nm=s1),
                make_entry_state("R1", corridor, "EB", 330, gs2, s_nm=s2),
            ))
            pert_cfg = EnsembleConfig(n_perturbed=2, seed=trial,
                                      horizon_s=1500.0)
            rollouts = simulate_ensemble(plan, start, corridor, pert_cfg)
            # both aircraft start transitioning from the centreline; once on
            # their lanes (max 60 s) the 7 NM guarantee must hold exactly
            for kind, _, rollout in rollouts.all_rollouts():
                trajs = rollout.trajectories
                if len(trajs) < 2:
                    continue
                a, b = trajs["L1"], trajs["R1"]
                n = min(len(a.times), len(b.times))
                for k in range(n):
                    if a.times[k] < 60.0:
                        continue  # both still transitioning off the centreline
                    if a.cross_track_nm[k] != 0.0 or b.cross_track_nm[k] != 0.0:
                        continue
                    d = float(np.hypot(a.x[k] - b.x[k], a.y[k] - b.y[k]))
                    assert d >= MINIMA.lateral_nm - 1e-9, (
                        f"trial {trial} {kind}: lanes 7 NM apart but "
                        f"separation {d:.3f} NM at t={a.times[k]}"
                    )


class TestCausalLocality:
    def test_solved_plan_touches_only_causal_segments(self, corridor):
        p1 = nominal_plan(corridor, "AC1", "EB", 350, 350, 300)
        p2 = nominal_plan(corridor, "AC2", "WB", 350, 350, 300)
        plan = plan_of(p1, p2)
        start = start_of(corridor, plan,
                         speeds={"AC1": (350, 480.0), "AC2": (350, 480.0)})
        cfg = EnsembleConfig(n_perturbed=3, seed=6, horizon_s=1500.0,
                             max_pilot_delay_s=10.0)
        res = resolve_airspace(plan, start, corridor, cfg, MINIMA)
        assert res.solved
        for cs in ("AC1", "AC2"):
            before = {pa.id: pa for pa in plan.plan_for(cs).all_actions()}
            after = {pa.id: pa for pa in res.plan.plan_for(cs).all_actions()}
            removed = set(before) - set(after)
            added = set(after) - set(before)
            # exactly the causal lateral action was replaced by the manoeuvre
            assert removed == {f"{cs}-LAT-1"}
            assert all("lateral-offset" in aid for aid in added)
            for aid in set(before) & set(after):
                old, new = before[aid], after[aid]
                assert old.action == new.action
                assert old.completion == new.completion
                assert old.provenance == new.provenance
                # triggers match except the mandated downstream re-link
                if old.trigger != new.trigger:
                    assert aid == f"{cs}-LAT-2"

    def test_vertical_logic_preserved_through_lateral_splice(self, corridor):
        p1 = nominal_plan(corridor, "AC1", "EB", 350, 350, 300)
        p2 = nominal_plan(corridor, "AC2", "WB", 350, 350, 300)
        plan = plan_of(p1, p2)
        start = start_of(corridor, plan,
                         speeds={"AC1": (350, 480.0), "AC2": (350, 480.0)})
        cfg = EnsembleConfig(n_perturbed=2, seed=6, horizon_s=1500.0)
        res = resolve_airspace(plan, start, corridor, cfg, MINIMA)
        assert res.solved
        for cs in ("AC1", "AC2"):
            assert res.plan.plan_for(cs).chain(Axis.VERTICAL) == \
                plan.plan_for(cs).chain(Axis.VERTICAL)


class TestLaneVertexInvariant:
    def test_lane_polylines_match_route_fix_count(self, corridor):
        for route in corridor.routes.values():
            for desig, lane in build_lanes(route, 3.5).items():
                assert len(lane.polyline) == len(route.fixes)
