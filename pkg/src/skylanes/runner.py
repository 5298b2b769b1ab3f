"""The operational cycle: plan, verify, resolve, issue.

An Episode owns the ground-truth world (one extra seeded perturbation draw,
distinct from every verification rollout) and repeats the cycle at the
replanning cadence: ingest state, build nominal plans for arrivals inside
the lookahead window, release expired axis constraints, ensemble-verify the
current airspace plan, resolve if unsafe, then advance the ground truth
while monitoring triggers and emitting clearances. Aircraft that can no
longer meet their coordinated exit are flagged and replanned.
"""

from __future__ import annotations

import time as wall_clock
from dataclasses import dataclass, field, replace
from typing import Callable, Optional

import numpy as np

from .conflict import TechnicalSafetyRecord, detect
from .events import EpisodeMetrics, EventLog, emit_metrics
from .geometry import LaneDesignation
from .plans import (
    AirspacePlan,
    Axis,
    ClimbTo,
    DescendTo,
    FlyLane,
    InfeasiblePlanError,
    EntryState,
    PlanError,
    PlannedAction,
    ResumeNav,
    SetSpeed,
    Snapshot,
    build_nominal_plan,
    release_constraints,
)
from .resolver import FALLBACK_PROVENANCE, resolve_airspace
from .scenario import AircraftSpec, Scenario, ScenarioError, parse_scenario
from .serialize import (
    encode_action,
    encode_airspace_geometry,
    encode_airspace_plan,
    encode_condition,
    encode_constraint,
    encode_state,
    encode_tsr,
)
from .twin import (
    ExecutionState,
    Perturbation,
    TwinStart,
    make_entry_state,
    sample_perturbation,
    simulate_ensemble,
)

TRUTH_SEED_TAG = 1_000_003  # namespace separating ground truth from ensemble draws
MISSED_EXIT_TOLERANCE_FT = 300.0
REPLAN_RATE_SLACK = 1.02  # replan when required descent rate exceeds nominal


@dataclass
class Clearance:
    id: str
    callsign: str
    planned_action: PlannedAction
    proposed_t: float
    status: str = "Proposed"  # Proposed | Approved | Issued | Completed | Missed
    issued_t: Optional[float] = None


@dataclass
class EpisodeResult:
    log: EventLog
    metrics: EpisodeMetrics
    report: str
    exit_code: int
    final_plan: AirspacePlan
    truth_trajectories: dict
    scenario: Scenario


class Episode:
    """One scenario execution; drive with run_cycle() until done."""

    def __init__(self, scenario: Scenario, auto_approve: bool = True,
                 keep_frames: bool = False):
        self.scenario = scenario
        self.airspace = scenario.airspace
        self.auto_approve = auto_approve
        self.keep_frames = keep_frames

        self.plan = AirspacePlan(plans=())
        self.log = EventLog()
        self.time_s = 0.0
        self.cycle_idx = 0
        self.done = False
        self.fallback_occurred = False
        self.alerts: list[dict] = []
        self.frames: list[dict] = []
        self._wall_start = wall_clock.perf_counter()
        self._clearance_seq = 0
        self.clearances: dict[str, Clearance] = {}
        self.open_clearances: dict[str, Clearance] = {}  # action id -> clearance
        self._planned: set[str] = set()
        self._replanned_missed: set[str] = set()
        self._predicted_exit: dict[str, float] = {}
        self._entry_time: dict[str, float] = {}
        self._original_exit_fl: dict[str, int] = {}
        self._last_tsr: Optional[TechnicalSafetyRecord] = None
        self.roster: list[AircraftSpec] = list(scenario.aircraft)

        callsigns = [a.callsign for a in scenario.aircraft]
        rng = np.random.default_rng([scenario.seed, TRUTH_SEED_TAG])
        self.truth_perturbation = sample_perturbation(
            "ground-truth", callsigns, rng,
            scenario.ensemble.speed_band, scenario.ensemble.max_pilot_delay_s,
        )
        self.truth = ExecutionState(
            self.plan, TwinStart(0.0, ()), self.airspace,
            self.truth_perturbation,
            lateral_minimum_nm=scenario.minima.lateral_nm,
        )
        self.log.append("scenario", 0.0, {
            "name": scenario.name, "seed": scenario.seed,
            "document": scenario.raw,
            "auto_approve": auto_approve,
        })
        self.log.append("airspace", 0.0, encode_airspace_geometry(self.airspace))

    # -- clearance gate -----------------------------------------------------

    def _gate(self, cs: str, pa: PlannedAction, t: float) -> Optional[float]:
        clearance = Clearance(
            id=f"CLR-{self._clearance_seq:04d}", callsign=cs,
            planned_action=pa, proposed_t=t,
        )
        self._clearance_seq += 1
        self.clearances[clearance.id] = clearance
        self.open_clearances[pa.id] = clearance
        self._log_clearance(clearance, t)
        if self.auto_approve or pa.provenance == "console-override":
            clearance.status = "Issued"
            clearance.issued_t = t
            self._log_clearance(clearance, t)
            return t + self.truth_perturbation.delay(cs)
        return None

    def _log_clearance(self, c: Clearance, t: float) -> None:
        self.log.append("clearance", t, {
            "clearance_id": c.id,
            "callsign": c.callsign,
            "status": c.status,
            "planned_action_id": c.planned_action.id,
            "provenance": c.planned_action.provenance,
            "action": encode_action(c.planned_action.action),
            "trigger": encode_condition(c.planned_action.trigger),
        })

    def approve_clearance(self, clearance_id: str) -> Clearance:
        c = self.clearances.get(clearance_id)
        if c is None:
            raise PlanError(f"unknown clearance {clearance_id!r}")
        if c.status != "Proposed":
            raise PlanError(f"clearance {clearance_id} is {c.status}, not Proposed")
        c.status = "Approved"
        self._log_clearance(c, self.time_s)
        return c

    def _issue_approved(self) -> None:
        for c in list(self.clearances.values()):
            if c.status == "Approved":
                self.truth.release_action(c.callsign, c.planned_action.id,
                                          self.time_s)
                c.status = "Issued"
                c.issued_t = self.time_s
                self._log_clearance(c, self.time_s)

    def reject_clearance(self, clearance_id: str, reason: str = "rejected") -> None:
        c = self.clearances.get(clearance_id)
        if c is None:
            raise PlanError(f"unknown clearance {clearance_id!r}")
        if c.status not in ("Proposed", "Approved"):
            raise PlanError(f"clearance {clearance_id} is {c.status}; cannot reject")
        c.status = "Missed"
        self._log_clearance(c, self.time_s)
        self._replan_aircraft(c.callsign, reason=f"clearance-{reason}")

    # -- planning -----------------------------------------------------------

    def _nominal_for(self, spec: AircraftSpec, entry_fl: Optional[int] = None,
                     entry_s: Optional[float] = None, id_tag: str = "") -> "object":
        entry = EntryState(
            callsign=spec.callsign,
            route_id=spec.route_id,
            entry_fl=entry_fl if entry_fl is not None else spec.entry_fl,
            ground_speed_kt=spec.ground_speed_kt,
            entry_s_nm=entry_s if entry_s is not None else spec.entry_s_nm,
        )
        pfl = max(spec.pfl, spec.exit_fl)
        fp = build_nominal_plan(
            entry, self.airspace, pfl, spec.exit_condition(),
            self.scenario.perf_for(spec),
        )
        if id_tag:
            fp = _retag_ids(fp, id_tag)
        return fp

    def _plan_arrivals(self) -> bool:
        changed = False
        for spec in self.roster:
            cs = spec.callsign
            if cs in self._planned:
                continue
            if spec.entry_time_s > self.time_s + self.scenario.entry_lookahead_s:
                continue
            fp = self._nominal_for(spec)
            self.plan = self.plan.with_plan(fp, bump=True)
            self._planned.add(cs)
            self._entry_time[cs] = spec.entry_time_s
            self._original_exit_fl[cs] = spec.exit_fl
            s_exit = self.airspace.fix_along_route(spec.route_id, spec.exit_fix)
            self._predicted_exit[cs] = spec.entry_time_s + (
                (s_exit - spec.entry_s_nm) / spec.ground_speed_kt * 3600.0
            )
            state = make_entry_state(cs, self.airspace, **spec.entry_state_args())
            self.truth.entrants.append((spec.entry_time_s, state))
            self.truth.entrants.sort(key=lambda e: (e[0], e[1].callsign))
            self.log.append("aircraft_planned", self.time_s, {
                "callsign": cs, "entry_time_s": spec.entry_time_s,
                "route": spec.route_id, "pfl": spec.pfl,
                "exit_fix": spec.exit_fix, "exit_fl": spec.exit_fl,
            })
            changed = True
        if changed:
            self.truth.rebind(self.plan)
        return changed

    def _replan_aircraft(self, cs: str, reason: str) -> bool:
        """Rebuild an aircraft's plan from its current state (exit kept)."""
        st = self.truth.states.get(cs)
        if st is None:
            return False
        spec = self._spec_for(cs)
        current_fl = int(round(st.altitude_ft / 100.0))
        try:
            fp = self._nominal_for(
                spec, entry_fl=current_fl, entry_s=st.s_centre_nm,
                id_tag=f"@r{self.plan.revision + 1}",
            )
        except InfeasiblePlanError as exc:
            self._alert("coordination-unsatisfiable", str(exc))
            return False
        constraints = tuple(
            c for c in self.plan.constraints if c.callsign != cs
        )
        self.plan = replace(self.plan.with_plan(fp, bump=True),
                            constraints=constraints)
        self.truth.rebind(self.plan)
        self._void_open_clearances(cs)
        self.log.append("replan", self.time_s, {
            "callsign": cs, "reason": reason,
            "plan_revision": self.plan.revision,
        })
        return True

    def _spec_for(self, cs: str) -> AircraftSpec:
        for a in self.roster:
            if a.callsign == cs:
                return a
        raise ScenarioError(f"unknown callsign {cs!r}")

    def _void_open_clearances(self, cs: str) -> None:
        for c in list(self.open_clearances.values()):
            if c.callsign == cs and c.status in ("Proposed", "Approved"):
                c.status = "Missed"
                self._log_clearance(c, self.time_s)
                self.open_clearances.pop(c.planned_action.id, None)

    def _alert(self, kind: str, message: str) -> None:
        record = {"kind": kind, "message": message}
        self.alerts.append(record)
        self.log.append("alert", self.time_s, record)

    # -- console commands ----------------------------------------------------

    def modify_clearance(self, clearance_id: str, action_doc: dict) -> None:
        """Replace a proposed clearance's action with an operator-supplied one.

        The replacement is validated against the aircraft's monotonic axis
        constraints, then spliced in as an immediately-triggered override
        (issued without further approval). The original clearance is marked
        Missed and the plan revision bumps.
        """
        from .plans import Manoeuvre, splice
        from .serialize import decode_action

        c = self.clearances.get(clearance_id)
        if c is None:
            raise PlanError(f"unknown clearance {clearance_id!r}")
        if c.status != "Proposed":
            raise PlanError(f"clearance {clearance_id} is {c.status}, not Proposed")
        action = decode_action(action_doc)
        cs = c.callsign
        if isinstance(action, FlyLane) \
                and action.route_id != self.plan.plan_for(cs).route_id:
            raise PlanError(
                f"replacement lane is on route {action.route_id!r} but {cs} "
                f"is flight-planned on {self.plan.plan_for(cs).route_id!r}"
            )
        st = self.truth.states.get(cs)
        direction = _action_direction(action, st)
        constraint = self.plan.constraint_on(cs, action.axis)
        if constraint is not None and direction is not None \
                and direction != constraint.direction:
            raise PlanError(
                f"replacement opposes the active {constraint.axis.value} "
                f"constraint {constraint.direction} on {cs} (from "
                f"{constraint.source_strategy or 'resolution'}); only "
                f"reinforcing actions are permitted until it releases"
            )
        original = c.planned_action
        if action.axis is original.axis:
            completion = original.completion
        elif isinstance(action, (ClimbTo, DescendTo)):
            from .plans import ReachedLevel

            completion = ReachedLevel(action.fl)
        else:
            from .plans import Immediate

            completion = Immediate()
        from .plans import Immediate as _Immediate

        override = PlannedAction(
            id=f"{cs}-{action.axis.value[:4].upper()}-console-r{self.plan.revision + 1}",
            trigger=_Immediate(),
            action=action,
            completion=completion,
            provenance="console-override",
        )
        manoeuvre = Manoeuvre("console-override", (("action", action.phrase()),),
                              (override,))
        causal = [original.id] if original.axis is action.axis else []
        fp = splice(self.plan.plan_for(cs), causal, manoeuvre)
        self.plan = self.plan.with_plan(fp, bump=True)
        self.truth.rebind(self.plan)
        c.status = "Missed"
        self._log_clearance(c, self.time_s)
        self.open_clearances.pop(original.id, None)
        self.log.append("replan", self.time_s, {
            "callsign": cs, "reason": "clearance-modified",
            "plan_revision": self.plan.revision,
        })

    def inject_aircraft(self, doc: dict) -> AircraftSpec:
        """Add an entrant at the next cycle (what-if exploration)."""
        from .scenario import parse_scenario

        cs = doc.get("callsign")
        if not cs or any(a.callsign == cs for a in self.roster):
            raise ScenarioError(f"injection needs a fresh callsign, got {cs!r}")
        route_id = doc.get("route")
        if route_id not in self.airspace.routes:
            raise ScenarioError(f"injection references unknown route {route_id!r}")
        exit_fix = doc.get("exit_fix")
        if (route_id, exit_fix) not in self.airspace.fix_s:
            raise ScenarioError(
                f"injection exit fix {exit_fix!r} is not on route {route_id!r}"
            )
        spec = AircraftSpec(
            callsign=cs,
            route_id=route_id,
            entry_time_s=max(float(doc.get("entry_time_s", self.time_s)), self.time_s),
            entry_fl=int(doc["entry_fl"]),
            pfl=int(doc["pfl"]),
            exit_fix=exit_fix,
            exit_fl=int(doc["exit_fl"]),
            ground_speed_kt=float(doc.get("ground_speed_kt", 480.0)),
            climb_rate_fpm=float(doc.get("climb_rate_fpm", 2000.0)),
            entry_s_nm=float(doc.get("entry_s_nm", 0.0)),
        )
        self.roster.append(spec)
        return spec

    def apply_console(self, command: dict) -> None:
        """Execute an operator command and log it for deterministic replay."""
        self.log.append("console", self.time_s, {
            "cycle": self.cycle_idx,
            "command": command,
        })
        op = command.get("op")
        if op == "approve":
            self.approve_clearance(command["clearance_id"])
        elif op == "reject":
            self.reject_clearance(command["clearance_id"])
        elif op == "modify":
            self.modify_clearance(command["clearance_id"], command["action"])
        elif op == "inject":
            self.inject_aircraft(command["aircraft"])
        else:
            raise PlanError(f"unknown console op {op!r}")

    # -- the cycle ----------------------------------------------------------

    def run_cycle(self) -> None:
        if self.done:
            return
        wall0 = wall_clock.perf_counter()
        scenario = self.scenario

        self._plan_arrivals()
        self._release_constraints()
        self._issue_approved()
        self.log.append("state", self.time_s, {
            "cycle": self.cycle_idx,
            "aircraft": {cs: encode_state(st)
                         for cs, st in sorted(self.truth.states.items())},
        })

        bundle = self.truth.start_bundle()
        remaining = max(scenario.dt_s, scenario.horizon_s - self.time_s)
        cfg = replace(scenario.ensemble,
                      horizon_s=min(scenario.ensemble.horizon_s, remaining))

        if self.plan.plans:
            rollouts = simulate_ensemble(
                self.plan, bundle, self.airspace, cfg,
                lateral_minimum_nm=scenario.minima.lateral_nm,
            )
            tsr = detect(rollouts, scenario.minima, scenario.thresholds)
            self._last_tsr = tsr
            self.log.append("verification", self.time_s, {
                "plan_revision": self.plan.revision,
                "conflicts": len(tsr),
                "rollouts": 1 + len(rollouts.perturbed) + len(rollouts.counterfactuals),
            })
            if not tsr.empty:
                self.log.append("tsr", self.time_s, encode_tsr(tsr))
                self._resolve(bundle, cfg)
            else:
                self._restore_coordination(rollouts)
            if self.keep_frames:
                self._capture_frame(rollouts, tsr if not tsr.empty else None)

        self._advance_truth()
        self._monitor_exits()
        self._monitor_coordination()

        self.log.append("cycle", self.time_s, {
            "cycle": self.cycle_idx,
            "aircraft": len(self.truth.states),
            "plan_revision": self.plan.revision,
            "wall_s": wall_clock.perf_counter() - wall0,
        })
        self.cycle_idx += 1

        out_of_traffic = not self.truth.states and not self.truth.entrants and \
            len(self._planned) == len(self.roster)
        if self.time_s >= scenario.horizon_s or out_of_traffic:
            self.done = True

    def _release_constraints(self) -> None:
        if not self.plan.constraints:
            return
        snap = Snapshot(self.time_s, self.truth.states)
        kept = release_constraints(
            self.plan.constraints, snap, self.truth.history, self.airspace,
            self.scenario.minima.lateral_nm,
        )
        if len(kept) != len(self.plan.constraints):
            for c in self.plan.constraints:
                if c not in kept:
                    self.log.append("constraint_released", self.time_s,
                                    encode_constraint(c))
            self.plan = replace(self.plan, constraints=kept)
            self.truth.plan = self.plan

    def _resolve(self, bundle: TwinStart, cfg) -> None:
        scenario = self.scenario
        res = resolve_airspace(
            self.plan, bundle, self.airspace, cfg,
            scenario.minima, scenario.thresholds, scenario.search,
            floor_fl=scenario.airspace.sector.floor_fl,
            ceiling_fl=scenario.airspace.sector.ceiling_fl,
        )
        self.log.append("resolution", self.time_s, {
            "outcome": res.outcome,
            "plan_revision": res.plan.revision,
            "expansions": res.stats.expansions,
            "simulations": res.stats.simulations,
            "rollouts": res.stats.rollouts,
            "applied_strategies": res.trace.applied_strategies(),
            "applied_labels": [a.label for a in res.trace.accepted_path()],
            "max_depth": res.trace.max_depth_reached(),
            "trace": res.trace.to_json(),
        })
        if res.outcome == "fallback":
            self.fallback_occurred = True
            self._alert("fallback", res.alert)
        elif res.outcome == "escalated":
            self.fallback_occurred = True
            self._alert("escalation", res.alert)
        if res.plan is not self.plan:
            self.plan = res.plan
            self.truth.rebind(self.plan)
            self.log.append("plan_adopted", self.time_s,
                            encode_airspace_plan(self.plan))

    def _advance_truth(self) -> None:
        steps = int(round(self.scenario.cadence_s / self.scenario.dt_s))
        for _ in range(steps):
            self.truth.step(self.scenario.dt_s, gate=self._gate)
        self.time_s = self.truth.time_s
        # close out clearances whose actions completed
        for pa_id, c in list(self.open_clearances.items()):
            timing = self.truth.timings.get(pa_id)
            if timing is not None and timing.completed_s is not None \
                    and c.status == "Issued":
                c.status = "Completed"
                self._log_clearance(c, self.time_s)
                self.open_clearances.pop(pa_id, None)

    def _monitor_exits(self) -> None:
        for cs, t_exit, alt in self.truth.exits:
            coordinated = self._original_exit_fl.get(cs)
            level_dev = alt - (coordinated * 100.0 if coordinated else alt)
            abandoned = any(
                pa.provenance == FALLBACK_PROVENANCE
                for pa in self.plan.plan_for(cs).all_actions()
            ) if self.plan.has(cs) else False
            missed = abs(level_dev) > MISSED_EXIT_TOLERANCE_FT and not abandoned
            self.log.append("aircraft_exited", self.time_s, {
                "callsign": cs,
                "exit_time_s": t_exit,
                "altitude_ft": alt,
                "level_dev_ft": level_dev,
                "time_dev_s": t_exit - self._predicted_exit.get(cs, t_exit),
                "missed": missed,
                "exit_abandoned_by_fallback": abandoned,
            })
            self._void_open_clearances(cs)
            self.plan = self.plan.without(cs)
            self.truth.plan = self.plan
        self.truth.exits.clear()

    def _restore_coordination(self, rollouts) -> None:
        """Replan aircraft predicted to exit off their coordinated level.

        Runs only when the current plan verifies clean, and only for aircraft
        whose axis constraints have all released (a spliced avoidance level
        must be held until its release condition fires); the rebuild returns
        the aircraft to its efficient nominal profile toward the fixed exit.
        """
        for cs, _, alt in rollouts.nominal.exits:
            if cs not in self.truth.states:
                continue
            coordinated = self._original_exit_fl.get(cs)
            if coordinated is None:
                continue
            if abs(alt - coordinated * 100.0) <= MISSED_EXIT_TOLERANCE_FT:
                continue
            fp = self.plan.plan_for(cs)
            if any(pa.provenance == FALLBACK_PROVENANCE for pa in fp.all_actions()):
                continue
            if any(c.callsign == cs for c in self.plan.constraints):
                continue  # still constrained by an active deconfliction
            self._replan_aircraft(cs, reason="restore-exit-coordination")

    def _monitor_coordination(self) -> None:
        """Replan aircraft whose coordinated exit became unsatisfiable."""
        for cs in sorted(self.truth.states):
            if cs in self._replanned_missed:
                continue
            fp = self.plan.plan_for(cs)
            if any(pa.provenance == FALLBACK_PROVENANCE for pa in fp.all_actions()):
                continue  # exit coordination explicitly abandoned
            st = self.truth.states[cs]
            spec = self._spec_for(cs)
            s_exit = self.airspace.fix_along_route(fp.route_id, fp.exit_fix)
            remaining_nm = s_exit - st.s_centre_nm
            if remaining_nm < 2.0:
                continue
            deficit_ft = abs(st.altitude_ft - spec.exit_fl * 100.0)
            if deficit_ft <= MISSED_EXIT_TOLERANCE_FT:
                continue
            minutes = remaining_nm / st.ground_speed_kt * 60.0
            required = deficit_ft / minutes
            if required > st.climb_rate_fpm * REPLAN_RATE_SLACK:
                self._replanned_missed.add(cs)
                if self._replan_aircraft(cs, reason="exit-coordination-at-risk"):
                    self._alert(
                        "missed-coordination-risk",
                        f"{cs} requires {required:.0f} ft/min to make "
                        f"FL{spec.exit_fl} at {fp.exit_fix}; replanned",
                    )

    def _capture_frame(self, rollouts, tsr) -> None:
        stride = max(1, int(30.0 // self.scenario.dt_s))
        trajectories = {}
        for cs, traj in rollouts.nominal.trajectories.items():
            trajectories[cs] = {
                "t": [round(float(v), 1) for v in traj.times[::stride]],
                "x": [round(float(v), 3) for v in traj.x[::stride]],
                "y": [round(float(v), 3) for v in traj.y[::stride]],
                "altitude_ft": [round(float(v), 0) for v in traj.altitude_ft[::stride]],
            }
        self.frames.append({
            "cycle": self.cycle_idx,
            "t_sim": self.time_s,
            "plan_revision": self.plan.revision,
            "trajectories": trajectories,
            "conflicts": encode_tsr(tsr)["records"] if tsr else [],
        })

    # -- wrap-up ------------------------------------------------------------

    def finish(self) -> EpisodeResult:
        truth_trajectories = self.truth.trajectories()
        violations = _executed_violations(truth_trajectories, self.scenario)
        self.log.append("execution_summary", self.time_s, {
            "violations": violations,
            "aircraft": sorted(truth_trajectories),
        })
        self.log.append("episode_end", self.time_s, {
            "cycles": self.cycle_idx,
            "wall_total_s": wall_clock.perf_counter() - self._wall_start,
            "fallback": self.fallback_occurred,
        })
        metrics, report = emit_metrics(self.log)
        exit_code = 2 if self.fallback_occurred else 0
        return EpisodeResult(
            log=self.log, metrics=metrics, report=report, exit_code=exit_code,
            final_plan=self.plan, truth_trajectories=truth_trajectories,
            scenario=self.scenario,
        )

    def snapshot(self) -> dict:
        pending = [
            {
                "clearance_id": c.id, "callsign": c.callsign,
                "status": c.status,
                "action": encode_action(c.planned_action.action),
                "proposed_t": c.proposed_t,
            }
            for c in self.clearances.values()
            if c.status in ("Proposed", "Approved")
        ]
        return {
            "t_sim": self.time_s,
            "cycle": self.cycle_idx,
            "done": self.done,
            "plan_revision": self.plan.revision,
            "aircraft": {
                cs: encode_state(st) for cs, st in sorted(self.truth.states.items())
            },
            "plan": encode_airspace_plan(self.plan),
            "pending_clearances": pending,
            "alerts": self.alerts[-10:],
            "conflicts": (
                encode_tsr(self._last_tsr)["records"] if self._last_tsr else []
            ),
        }


def _retag_ids(fp, tag: str):
    new_chains = []
    for axis, chain in fp.chains:
        new_chains.append(
            (axis, tuple(replace(pa, id=pa.id + tag) for pa in chain))
        )
    return replace(fp, chains=tuple(new_chains))


def _executed_violations(trajectories, scenario: Scenario) -> int:
    from .conflict import RolloutSource, _scan_rollout

    records = _scan_rollout(
        trajectories, RolloutSource("nominal"), scenario.minima,
        scenario.thresholds,
    )
    return len(records)


def _action_direction(action, state) -> Optional[str]:
    # monotonic-constraint direction of an operator override, for validation
    if isinstance(action, FlyLane):
        if action.designation is LaneDesignation.LEFT:
            return "Left"
        if action.designation is LaneDesignation.RIGHT:
            return "Right"
        return None
    if isinstance(action, ClimbTo) and state is not None:
        return "ClimbOnly" if action.fl * 100.0 > state.altitude_ft else "DescendOnly"
    if isinstance(action, DescendTo) and state is not None:
        return "DescendOnly" if action.fl * 100.0 < state.altitude_ft else "ClimbOnly"
    if isinstance(action, SetSpeed) and state is not None:
        return "SlowOnly" if action.kt < state.ground_speed_kt else "FastOnly"
    return None


def replay_episode(records: list[dict]) -> tuple[EpisodeResult, bool]:
    # re-run a logged episode, re-applying console commands at their cycles
    scenario_rec = next(r for r in records if r["type"] == "scenario")
    scenario = parse_scenario(scenario_rec["document"], where="embedded-scenario")
    auto = bool(scenario_rec.get("auto_approve", True))
    console_by_cycle: dict[int, list[dict]] = {}
    for r in records:
        if r["type"] == "console":
            console_by_cycle.setdefault(int(r["cycle"]), []).append(r["command"])
    episode = Episode(scenario, auto_approve=auto)
    while not episode.done:
        for command in console_by_cycle.get(episode.cycle_idx, ()):
            episode.apply_console(command)
        episode.run_cycle()
    return episode.finish(), True


def run_episode(scenario: Scenario, mode: str = "headless",
                auto_approve: Optional[bool] = None,
                keep_frames: bool = False) -> EpisodeResult:
    """Execute a scenario to completion and aggregate its metrics.

    Headless mode auto-approves every proposed clearance so episodes run
    unattended; gateway-attached episodes are driven cycle by cycle by the
    gateway instead (see the gateway module).
    """
    if auto_approve is None:
        auto_approve = mode == "headless"
    episode = Episode(scenario, auto_approve=auto_approve, keep_frames=keep_frames)
    while not episode.done:
        episode.run_cycle()
    return episode.finish()
