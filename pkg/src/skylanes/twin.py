"""Deterministic kinematic digital twin.

Executes condition-gated airspace plans at a fixed step: aircraft follow
their assigned lane polyline at ground speed, move toward commanded levels
at the nominal climb/descent rate, and change lanes on a 30 degree
intercept. Uncertainty enters as a per-aircraft along-track speed factor
and a pilot response delay; loss-of-communication counterfactuals freeze
trigger evaluation at a cut time and let already-issued actions run out.

Everything is pure with respect to the plan: trigger firings are recorded
in trajectories, never written back into plan values.
"""

from __future__ import annotations

import bisect
import hashlib
import math
from dataclasses import dataclass, field, replace
from typing import Callable, Iterable, Mapping, Optional, Sequence

import numpy as np

from .geometry import AirspaceMap, LaneDesignation, LanePath
from .plans import (
    Action,
    AircraftPassedLaterally,
    AirspacePlan,
    Axis,
    ClimbTo,
    Condition,
    ConditionError,
    DescendTo,
    FlyLane,
    PassageHistory,
    PlanError,
    PlannedAction,
    ResumeNav,
    SetSpeed,
)

DEFAULT_DT_S = 5.0
MAX_HORIZON_S = 3600.0
ENTRY_LOOKAHEAD_S = 900.0
COUNTERFACTUAL_DURATION_S = 900.0
LANE_INTERCEPT_DEG = 30.0
_COS_I = math.cos(math.radians(LANE_INTERCEPT_DEG))
_SIN_I = math.sin(math.radians(LANE_INTERCEPT_DEG))
DEFAULT_CLIMB_RATE_FPM = 2000.0
SPEED_MIN_KT, SPEED_MAX_KT = 250.0, 600.0


class TwinError(RuntimeError):
    """Simulation integrity failure (e.g. aircraft with no lane to follow)."""


@dataclass(slots=True)
class AircraftState:
    """Kinematic state of one aircraft; mutable, copied between rollouts."""

    callsign: str
    route_id: str
    lane: LaneDesignation
    s_nm: float              # along the current target lane
    cross_track_nm: float    # signed offset from the target lane (decays)
    s_centre_nm: float       # along the route centreline
    x: float
    y: float
    altitude_ft: float
    ground_speed_kt: float   # commanded speed before perturbation
    vertical_rate_fpm: float
    commanded_level_ft: Optional[float]
    seg_idx: int = 0
    climb_rate_fpm: float = DEFAULT_CLIMB_RATE_FPM

    def copy(self) -> "AircraftState":
        return replace(self)

    @property
    def position(self) -> tuple[float, float]:
        return (self.x, self.y)


def make_entry_state(
    callsign: str,
    airspace: AirspaceMap,
    route_id: str,
    entry_fl: int,
    ground_speed_kt: float,
    s_nm: float = 0.0,
    climb_rate_fpm: float = DEFAULT_CLIMB_RATE_FPM,
) -> AircraftState:
    centre = airspace.centre(route_id)
    x, y = centre.path.point_at(s_nm)
    if not (SPEED_MIN_KT <= ground_speed_kt <= SPEED_MAX_KT):
        raise TwinError(
            f"{callsign}: entry speed {ground_speed_kt} kt outside envelope"
        )
    return AircraftState(
        callsign=callsign,
        route_id=route_id,
        lane=LaneDesignation.CENTRE,
        s_nm=s_nm,
        cross_track_nm=0.0,
        s_centre_nm=s_nm,
        x=x,
        y=y,
        altitude_ft=entry_fl * 100.0,
        ground_speed_kt=ground_speed_kt,
        vertical_rate_fpm=0.0,
        commanded_level_ft=entry_fl * 100.0,
        climb_rate_fpm=climb_rate_fpm,
    )


@dataclass(frozen=True)
class Perturbation:
    """One sampled execution scenario: speed factors and pilot delays."""

    scenario_id: str
    speed_factor: Mapping[str, float]
    pilot_delay_s: Mapping[str, float]

    def __post_init__(self):
        for cs, f in self.speed_factor.items():
            if not (0.90 <= f <= 1.10):
                raise TwinError(f"speed factor {f} for {cs} outside [0.90, 1.10]")
        for cs, d in self.pilot_delay_s.items():
            if not (0.0 <= d <= 60.0):
                raise TwinError(f"pilot delay {d}s for {cs} outside [0, 60]")

    def factor(self, callsign: str) -> float:
        return self.speed_factor.get(callsign, 1.0)

    def delay(self, callsign: str) -> float:
        return self.pilot_delay_s.get(callsign, 0.0)


NOMINAL_PERTURBATION = Perturbation("nominal", {}, {})


def sample_perturbation(
    scenario_id: str,
    callsigns: Sequence[str],
    rng: np.random.Generator,
    speed_band: float = 0.05,
    max_pilot_delay_s: float = 30.0,
) -> Perturbation:
    factors = {}
    delays = {}
    for cs in sorted(callsigns):
        factors[cs] = float(1.0 + rng.uniform(-speed_band, speed_band))
        delays[cs] = float(rng.uniform(0.0, max_pilot_delay_s))
    return Perturbation(scenario_id, factors, delays)


@dataclass(frozen=True)
class ActionTiming:
    fired_s: float
    effect_s: Optional[float] = None
    completed_s: Optional[float] = None


@dataclass
class Trajectory:
    """Fixed-step samples for one aircraft plus its trigger-firing log."""

    callsign: str
    times: np.ndarray
    x: np.ndarray
    y: np.ndarray
    altitude_ft: np.ndarray
    vertical_rate_fpm: np.ndarray
    ground_speed_kt: np.ndarray
    s_nm: np.ndarray
    cross_track_nm: np.ndarray
    lane: list[tuple[float, str, LaneDesignation]]  # (time, route, lane) changes
    timings: dict[str, ActionTiming]

    def fingerprint(self) -> str:
        h = hashlib.sha256()
        h.update(self.callsign.encode())
        for arr in (self.times, self.x, self.y, self.altitude_ft,
                    self.vertical_rate_fpm, self.ground_speed_kt):
            h.update(np.ascontiguousarray(arr, dtype=np.float64).tobytes())
        return h.hexdigest()


@dataclass
class RolloutResult:
    perturbation_id: str
    trajectories: dict[str, Trajectory]
    history: PassageHistory
    exits: list[tuple[str, float, float]]  # (callsign, time, altitude)
    cut_snapshots: list[tuple[float, "ExecutionState"]] = field(default_factory=list)

    def fingerprint(self) -> str:
        h = hashlib.sha256()
        for cs in sorted(self.trajectories):
            h.update(self.trajectories[cs].fingerprint().encode())
        return h.hexdigest()


@dataclass
class RolloutSet:
    """All rollouts used to verify one airspace-plan revision."""

    plan_revision: int
    nominal: RolloutResult
    perturbed: list[RolloutResult]
    counterfactuals: list[tuple[float, RolloutResult]]

    def all_rollouts(self):
        yield ("nominal", None, self.nominal)
        for k, r in enumerate(self.perturbed):
            yield ("perturbed", k, r)
        for cut_t, r in self.counterfactuals:
            yield ("counterfactual", cut_t, r)

    def fingerprint(self) -> str:
        h = hashlib.sha256()
        h.update(str(self.plan_revision).encode())
        for kind, key, r in self.all_rollouts():
            h.update(f"{kind}:{key}".encode())
            h.update(r.fingerprint().encode())
        return h.hexdigest()


@dataclass(frozen=True)
class EnsembleConfig:
    n_perturbed: int = 20
    seed: int = 0
    speed_band: float = 0.05
    max_pilot_delay_s: float = 30.0
    cut_interval_s: float = 300.0
    counterfactual_duration_s: float = COUNTERFACTUAL_DURATION_S
    horizon_s: float = MAX_HORIZON_S
    dt_s: float = DEFAULT_DT_S
    entry_lookahead_s: float = ENTRY_LOOKAHEAD_S


@dataclass(frozen=True)
class TwinStart:
    """Initial conditions for a rollout: live states plus scheduled entrants.

    fired_ids marks actions whose trigger already fired; pending carries
    (effect_time, callsign, action_id) for instructions issued but not yet
    acted on (pilot response latency straddling the bundle time).
    """

    time_s: float
    states: tuple[AircraftState, ...]
    entrants: tuple[tuple[float, AircraftState], ...] = ()
    history: Optional[PassageHistory] = None
    completed_ids: Mapping[str, frozenset] = field(default_factory=dict)
    fired_ids: Mapping[str, frozenset] = field(default_factory=dict)
    pending: tuple[tuple[float, str, str], ...] = ()


# ---------------------------------------------------------------------------
# Execution machinery
# ---------------------------------------------------------------------------


class _AxisCursor:
    __slots__ = ("chain", "next_idx", "active")

    def __init__(self, chain: tuple[PlannedAction, ...]):
        self.chain = chain
        self.next_idx = 0
        self.active: Optional[PlannedAction] = None

    def copy(self) -> "_AxisCursor":
        c = _AxisCursor(self.chain)
        c.next_idx = self.next_idx
        c.active = self.active
        return c


class _Ctx:
    """Mutable duck-typed EvalContext reused across the hot loop."""

    __slots__ = ("subject", "time_s", "states", "history", "airspace",
                 "lateral_minimum_nm")

    def __init__(self, states, history, airspace, lateral_minimum_nm):
        self.subject = ""
        self.time_s = 0.0
        self.states = states
        self.history = history
        self.airspace = airspace
        self.lateral_minimum_nm = lateral_minimum_nm


#: gate(callsign, planned_action, fired_t) -> effect time, or None to hold
Gate = Callable[[str, PlannedAction, float], Optional[float]]


class ExecutionState:
    """Live simulation state for one rollout or the ground-truth world."""

    def __init__(
        self,
        plan: AirspacePlan,
        start: TwinStart,
        airspace: AirspaceMap,
        perturbation: Perturbation = NOMINAL_PERTURBATION,
        lateral_minimum_nm: float = 5.0,
        record: bool = True,
    ):
        self.plan = plan
        self.airspace = airspace
        self.perturbation = perturbation
        self.lateral_minimum_nm = lateral_minimum_nm
        self.time_s = start.time_s
        self.frozen = False  # counterfactual mode: no new trigger firings
        self.record = record

        self.states: dict[str, AircraftState] = {}
        self.history = (start.history or PassageHistory()).copy()
        self.cursors: dict[str, dict[Axis, _AxisCursor]] = {}
        self.timings: dict[str, ActionTiming] = {}
        self.pending: list[tuple[float, str, PlannedAction]] = []
        #: actions whose trigger fired but whose clearance is held awaiting
        #: approval; excluded from fired_ids so verification rollouts model
        #: the plan's own trigger semantics instead of a lost effect
        self.held: set[str] = set()
        self.exits: list[tuple[str, float, float]] = []
        self.entrants: list[tuple[float, AircraftState]] = sorted(
            ((t, st) for t, st in start.entrants), key=lambda e: (e[0], e[1].callsign)
        )
        self._completed_seed = {cs: frozenset(v) for cs, v in start.completed_ids.items()}
        self._fired_seed = {cs: frozenset(v) for cs, v in start.fired_ids.items()}
        self._samples: dict[str, list] = {}
        self._lane_log: dict[str, list] = {}
        self._watch_pairs: list[tuple[str, str]] = []
        self._proj_hints: dict[tuple[str, str], int] = {}
        self._exit_s: dict[str, float] = {}
        self._order: list[str] = []
        self._paths: dict[str, tuple] = {}
        self._factor = {cs: perturbation.factor(cs) for cs in perturbation.speed_factor}
        self._delay = dict(perturbation.pilot_delay_s)
        self._ctx = _Ctx(self.states, self.history, airspace, lateral_minimum_nm)

        for st in sorted(start.states, key=lambda s: s.callsign):
            self._admit(st.copy())
        for effect_t, cs, action_id in start.pending:
            if self.plan.has(cs):
                pa = self.plan.plan_for(cs).find(action_id)
                if pa is not None:
                    self.pending.append((effect_t, cs, pa))
        self._rebuild_watch_pairs()

    # -- setup ------------------------------------------------------------

    def _admit(self, st: AircraftState) -> None:
        cs = st.callsign
        if not self.plan.has(cs):
            raise TwinError(f"aircraft {cs} has no flight plan")
        self.states[cs] = st
        self.history.seen.add(cs)
        bisect.insort(self._order, cs)
        self._refresh_paths(cs)
        self._bind_chains(cs)
        if self.record:
            self._samples[cs] = []
            self._lane_log[cs] = [(self.time_s, st.route_id, st.lane)]
            self._sample_one(cs, st)

    def _bind_chains(self, cs: str) -> None:
        fp = self.plan.plan_for(cs)
        done = self._completed_seed.get(cs, frozenset())
        fired = self._fired_seed.get(cs, frozenset())
        cursors = {}
        for axis, chain in fp.chains:
            cur = _AxisCursor(chain)
            for pa in chain:
                if pa.id in done:
                    cur.next_idx += 1
                elif pa.id in fired:
                    cur.active = pa
                    cur.next_idx += 1
                    # seeded actives keep a firing record so causal
                    # attribution can still see them
                    self.timings.setdefault(pa.id, ActionTiming(fired_s=self.time_s))
                    break
                else:
                    break
            cursors[axis] = cur
        self.cursors[cs] = cursors
        self._exit_s[cs] = self.airspace.fix_along_route(fp.route_id, fp.exit_fix)

    def _refresh_paths(self, cs: str) -> None:
        st = self.states[cs]
        lane_path = self.airspace.lane(st.route_id, st.lane).path
        centre_path = self.airspace.centre(st.route_id).path
        self._paths[cs] = (lane_path, centre_path)

    def _rebuild_watch_pairs(self) -> None:
        """Track passage only for pairs some condition actually references."""
        pairs = set()

        def scan(cond: Condition, subject: str):
            if isinstance(cond, AircraftPassedLaterally):
                pairs.add((subject, cond.other))
            inner = getattr(cond, "inner", None)
            if inner is not None:
                scan(inner, subject)
            for t in getattr(cond, "terms", ()):
                scan(t, subject)

        for cs, fp in self.plan.plans:
            for pa in fp.all_actions():
                scan(pa.trigger, cs)
                scan(pa.completion, cs)
        for c in self.plan.constraints:
            scan(c.release, c.callsign)
        self._watch_pairs = sorted(pairs)

    def rebind(self, plan: AirspacePlan) -> None:
        """Adopt a new plan revision, preserving execution progress by id."""
        self._completed_seed = {cs: frozenset(self.completed_ids(cs)) for cs in self.states}
        self._fired_seed = {cs: frozenset(self.fired_ids_in_progress(cs)) for cs in self.states}
        self.plan = plan
        valid_ids = {
            pa.id for _, fp in plan.plans for pa in fp.all_actions()
        }
        self.pending = [p for p in self.pending if p[2].id in valid_ids]
        self.held &= valid_ids
        for cs in list(self.states):
            self._bind_chains(cs)
        self._rebuild_watch_pairs()

    def completed_ids(self, cs: str) -> set[str]:
        out = set(self._completed_seed.get(cs, ()))
        for axis, cur in self.cursors.get(cs, {}).items():
            for pa in cur.chain[: cur.next_idx]:
                if cur.active is None or pa.id != cur.active.id:
                    out.add(pa.id)
        return out

    def fired_ids_in_progress(self, cs: str) -> set[str]:
        out = set()
        for cur in self.cursors.get(cs, {}).values():
            if cur.active is not None and cur.active.id not in self.held:
                out.add(cur.active.id)
        return out

    def start_bundle(self) -> TwinStart:
        """Snapshot suitable for seeding verification rollouts."""
        return TwinStart(
            time_s=self.time_s,
            states=tuple(st.copy() for _, st in sorted(self.states.items())),
            entrants=tuple((t, st.copy()) for t, st in self.entrants),
            history=self.history.copy(),
            completed_ids={cs: frozenset(self.completed_ids(cs)) for cs in self.states},
            fired_ids={cs: frozenset(self.fired_ids_in_progress(cs)) for cs in self.states},
            pending=tuple((t, cs, pa.id) for t, cs, pa in self.pending),
        )

    def clone(self) -> "ExecutionState":
        other = object.__new__(ExecutionState)
        other.plan = self.plan
        other.airspace = self.airspace
        other.perturbation = self.perturbation
        other.lateral_minimum_nm = self.lateral_minimum_nm
        other.time_s = self.time_s
        other.frozen = self.frozen
        other.record = self.record
        other.states = {cs: st.copy() for cs, st in self.states.items()}
        other.history = self.history.copy()
        other.cursors = {
            cs: {ax: cur.copy() for ax, cur in axmap.items()}
            for cs, axmap in self.cursors.items()
        }
        other.timings = dict(self.timings)
        other.pending = list(self.pending)
        other.held = set(self.held)
        other.exits = list(self.exits)
        other.entrants = list(self.entrants)
        other._completed_seed = dict(self._completed_seed)
        other._fired_seed = dict(self._fired_seed)
        other._samples = {cs: list(v) for cs, v in self._samples.items()}
        other._lane_log = {cs: list(v) for cs, v in self._lane_log.items()}
        other._watch_pairs = list(self._watch_pairs)
        other._proj_hints = dict(self._proj_hints)
        other._exit_s = dict(self._exit_s)
        other._order = list(self._order)
        other._paths = dict(self._paths)
        other._factor = dict(self._factor)
        other._delay = dict(self._delay)
        other._ctx = _Ctx(other.states, other.history, other.airspace,
                          other.lateral_minimum_nm)
        return other

    # -- per-step logic ----------------------------------------------------

    def _update_history(self) -> None:
        states = self.states
        for subject, other in self._watch_pairs:
            me = states.get(subject)
            oth = states.get(other)
            if me is None or oth is None:
                continue
            centre = self.airspace.centre(me.route_id).path
            hint = self._proj_hints.get((subject, other), 0)
            s_other, hint = centre.project_near(oth.x, oth.y, hint)
            self._proj_hints[(subject, other)] = hint
            sep = math.hypot(me.x - oth.x, me.y - oth.y)
            self.history.observe(
                subject, other, s_other - me.s_centre_nm, sep, self.lateral_minimum_nm
            )

    def _apply_effect(self, cs: str, pa: PlannedAction) -> None:
        st = self.states.get(cs)
        if st is None:
            return
        action = pa.action
        if isinstance(action, (ClimbTo, DescendTo)):
            st.commanded_level_ft = action.fl * 100.0
        elif isinstance(action, SetSpeed):
            st.ground_speed_kt = min(max(action.kt, SPEED_MIN_KT), SPEED_MAX_KT)
        elif isinstance(action, (FlyLane, ResumeNav)):
            if isinstance(action, FlyLane):
                route_id, desig = action.route_id, action.designation
            else:
                route_id, desig = st.route_id, LaneDesignation.CENTRE
            if (route_id, desig) == (st.route_id, st.lane):
                return
            lane = self.airspace.lane(route_id, desig)
            at = lane.path.along_track(st.x, st.y)
            st.route_id = route_id
            st.lane = desig
            st.s_nm = at.s_nm
            st.cross_track_nm = at.cross_track_nm
            st.seg_idx = lane.path.segment_at(at.s_nm, st.seg_idx)
            self._refresh_paths(cs)
            if self.record:
                self._lane_log[cs].append((self.time_s, route_id, desig))
        timing = self.timings.get(pa.id)
        if timing is not None and timing.effect_s is None:
            self.timings[pa.id] = replace(timing, effect_s=self.time_s)

    def release_action(self, cs: str, action_id: str, release_t: float) -> None:
        """Schedule the effect of a previously held (approved) action."""
        cur = self.cursors.get(cs)
        if not cur:
            return
        for axis_cur in cur.values():
            if axis_cur.active is not None and axis_cur.active.id == action_id:
                effect_t = release_t + self.perturbation.delay(cs)
                self.pending.append((effect_t, cs, axis_cur.active))
                self.held.discard(action_id)
                return
        raise TwinError(f"no held action {action_id!r} on {cs}")

    def step(self, dt: float, gate: Optional[Gate] = None) -> list[tuple[str, PlannedAction, float]]:
        """Advance the world by dt seconds; returns newly fired actions."""
        if dt <= 0:
            raise TwinError("dt must be positive")
        t = self.time_s
        ctx = self._ctx
        ctx.time_s = t
        issued: list[tuple[str, PlannedAction, float]] = []

        # admit scheduled entrants
        while self.entrants and self.entrants[0][0] <= t:
            _, st = self.entrants.pop(0)
            self._admit(st.copy())
            self._rebuild_watch_pairs()

        self._update_history()

        # completions then triggers, per aircraft, per axis
        for cs in self._order:
            ctx.subject = cs
            cursors = self.cursors[cs]
            for cur in cursors.values():
                pa = cur.active
                if pa is not None:
                    try:
                        done = pa.completion.evaluate(ctx)
                    except ConditionError:
                        done = False
                    if done:
                        timing = self.timings.get(pa.id)
                        if timing is not None:
                            self.timings[pa.id] = replace(timing, completed_s=t)
                        cur.active = None
                        pa = None
                if pa is None and not self.frozen and cur.next_idx < len(cur.chain):
                    nxt = cur.chain[cur.next_idx]
                    try:
                        fire = nxt.trigger.evaluate(ctx)
                    except ConditionError:
                        fire = False
                    if fire:
                        cur.active = nxt
                        cur.next_idx += 1
                        self.timings[nxt.id] = ActionTiming(fired_s=t)
                        issued.append((cs, nxt, t))
                        if gate is None:
                            effect_t = t + self._delay.get(cs, 0.0)
                        else:
                            effect_t = gate(cs, nxt, t)
                        if effect_t is not None:
                            self.pending.append((effect_t, cs, nxt))
                        else:
                            self.held.add(nxt.id)

        # apply due effects in deterministic order
        if self.pending:
            due = [p for p in self.pending if p[0] <= t]
            if due:
                self.pending = [p for p in self.pending if p[0] > t]
                for _, cs, pa in sorted(due, key=lambda p: (p[0], p[1], p[2].id)):
                    self._apply_effect(cs, pa)

        # kinematics
        dt_h = dt / 3600.0
        exited: list[str] = []
        factor = self._factor
        for cs in self._order:
            st = self.states[cs]
            path, centre = self._paths[cs]
            v = st.ground_speed_kt * factor.get(cs, 1.0)

            cross = st.cross_track_nm
            if cross != 0.0:
                lat_step = v * _SIN_I * dt_h
                if abs(cross) <= lat_step:
                    frac = abs(cross) / lat_step if lat_step > 0 else 0.0
                    along = v * dt_h * (_COS_I * frac + (1.0 - frac))
                    st.cross_track_nm = 0.0
                else:
                    st.cross_track_nm = cross - math.copysign(lat_step, cross)
                    along = v * _COS_I * dt_h
            else:
                along = v * dt_h

            s = st.s_nm + along
            if s > path.length:
                s = path.length
            st.s_nm = s
            st.seg_idx = path.segment_at(s, st.seg_idx)
            px, py = path.point_at(s, st.seg_idx)
            if st.cross_track_nm != 0.0:
                nx, ny = path.left_normal(st.seg_idx)
                px += st.cross_track_nm * nx
                py += st.cross_track_nm * ny
            st.x, st.y = px, py
            st.s_centre_nm, _ = centre.project_near(px, py, st.seg_idx)

            # vertical motion toward the commanded level
            target = st.commanded_level_ft
            if target is not None and st.altitude_ft != target:
                rate = st.climb_rate_fpm * factor.get(cs, 1.0)
                step_ft = rate * dt / 60.0
                delta = target - st.altitude_ft
                if abs(delta) <= step_ft:
                    st.altitude_ft = target
                    st.vertical_rate_fpm = 0.0
                else:
                    st.altitude_ft += math.copysign(step_ft, delta)
                    st.vertical_rate_fpm = math.copysign(rate, delta)
            else:
                st.vertical_rate_fpm = 0.0

            if st.s_centre_nm >= self._exit_s[cs] - 1e-9 or s >= path.length - 1e-9:
                exited.append(cs)

        self.time_s = t + dt

        if self.record:
            sample = self._sample_one
            for cs in self._order:
                sample(cs, self.states[cs])
        for cs in exited:
            self.exits.append((cs, self.time_s, self.states[cs].altitude_ft))
            del self.states[cs]
            self._order.remove(cs)
            del self._paths[cs]

        return issued

    def _sample_one(self, cs: str, st: AircraftState) -> None:
        v = st.ground_speed_kt * self._factor.get(cs, 1.0)
        self._samples[cs].append(
            (self.time_s, st.x, st.y, st.altitude_ft, st.vertical_rate_fpm,
             v, st.s_nm, st.cross_track_nm)
        )

    def active_aircraft(self) -> int:
        return len(self.states)

    def snapshot_states(self) -> dict[str, AircraftState]:
        return {cs: st.copy() for cs, st in self.states.items()}

    def trajectories(self) -> dict[str, Trajectory]:
        out = {}
        for cs, rows in self._samples.items():
            arr = np.array(rows, dtype=np.float64).reshape(-1, 8)
            timings = {
                aid: tm for aid, tm in self.timings.items()
                if aid.startswith(f"{cs}-") or self._owns(cs, aid)
            }
            out[cs] = Trajectory(
                callsign=cs,
                times=arr[:, 0],
                x=arr[:, 1],
                y=arr[:, 2],
                altitude_ft=arr[:, 3],
                vertical_rate_fpm=arr[:, 4],
                ground_speed_kt=arr[:, 5],
                s_nm=arr[:, 6],
                cross_track_nm=arr[:, 7],
                lane=list(self._lane_log.get(cs, [])),
                timings=timings,
            )
        return out

    def _owns(self, cs: str, action_id: str) -> bool:
        if not self.plan.has(cs):
            return False
        return self.plan.plan_for(cs).find(action_id) is not None


# ---------------------------------------------------------------------------
# Rollout drivers
# ---------------------------------------------------------------------------


def step(
    exec_state: ExecutionState,
    dt: float = DEFAULT_DT_S,
    gate: Optional[Gate] = None,
) -> list[tuple[str, PlannedAction, float]]:
    """Single simulation step (module-level convenience wrapper)."""
    return exec_state.step(dt, gate)


def export_trajectories(trajectories: Mapping[str, Trajectory], path) -> int:
    """Write line-delimited trajectory records for timelines and plotting.

    One JSON object per sample: {"t", "callsign", "x", "y", "altitude_ft"}.
    Returns the number of records written.
    """
    import json
    from pathlib import Path

    count = 0
    with Path(path).open("w") as fh:
        for cs in sorted(trajectories):
            traj = trajectories[cs]
            for k in range(len(traj.times)):
                fh.write(json.dumps({
                    "t": round(float(traj.times[k]), 3),
                    "callsign": cs,
                    "x": round(float(traj.x[k]), 4),
                    "y": round(float(traj.y[k]), 4),
                    "altitude_ft": round(float(traj.altitude_ft[k]), 1),
                }) + "\n")
                count += 1
    return count


def simulate(
    plan: AirspacePlan,
    start: TwinStart,
    airspace: AirspaceMap,
    horizon_s: float = MAX_HORIZON_S,
    dt_s: float = DEFAULT_DT_S,
    perturbation: Perturbation = NOMINAL_PERTURBATION,
    cut_times: Sequence[float] = (),
    lateral_minimum_nm: float = 5.0,
) -> RolloutResult:
    """Forward-simulate a plan from a start bundle until horizon or empty sky.

    Scheduled entrants join at their entry times. If cut_times are given,
    deep-copied execution snapshots are captured when the clock passes each
    one (for loss-of-communication counterfactuals).
    """
    if horizon_s > MAX_HORIZON_S + 1e-9:
        raise TwinError(f"horizon {horizon_s}s exceeds {MAX_HORIZON_S:.0f}s maximum")
    exec_state = ExecutionState(
        plan, start, airspace, perturbation, lateral_minimum_nm
    )
    cuts = sorted(t for t in cut_times if t >= start.time_s)
    snapshots: list[tuple[float, ExecutionState]] = []
    end = start.time_s + horizon_s

    def capture_due():
        while cuts and cuts[0] <= exec_state.time_s + 1e-9:
            snapshots.append((cuts.pop(0), exec_state.clone()))

    capture_due()
    while exec_state.time_s < end - 1e-9:
        if not exec_state.states and not exec_state.entrants:
            break
        exec_state.step(dt_s)
        capture_due()

    result = RolloutResult(
        perturbation_id=perturbation.scenario_id,
        trajectories=exec_state.trajectories(),
        history=exec_state.history,
        exits=exec_state.exits,
        cut_snapshots=snapshots,
    )
    return result


def rollout_counterfactual(
    snapshot: ExecutionState,
    duration_s: float = COUNTERFACTUAL_DURATION_S,
    dt_s: float = DEFAULT_DT_S,
) -> RolloutResult:
    """Loss-of-communication rollout from a cut snapshot.

    Triggers are evaluated once at the cut instant (instructions already due
    are considered issued), then no further triggers fire; aircraft complete
    active actions, hold level and continue along their assigned lanes.
    """
    exec_state = snapshot.clone()
    exec_state.record = True
    # restart trajectory recording from the cut
    exec_state._samples = {cs: [] for cs in exec_state.states}
    exec_state._lane_log = {
        cs: [(exec_state.time_s, st.route_id, st.lane)]
        for cs, st in exec_state.states.items()
    }
    for cs, st in exec_state.states.items():
        exec_state._sample_one(cs, st)
    exec_state.entrants = []  # nobody new can be instructed into the plan
    end = exec_state.time_s + duration_s
    first = True
    while exec_state.time_s < end - 1e-9 and exec_state.states:
        exec_state.frozen = not first
        exec_state.step(dt_s)
        first = False
    exec_state.frozen = True
    return RolloutResult(
        perturbation_id=f"counterfactual@{snapshot.time_s:.0f}",
        trajectories=exec_state.trajectories(),
        history=exec_state.history,
        exits=exec_state.exits,
    )


def simulate_ensemble(
    plan: AirspacePlan,
    start: TwinStart,
    airspace: AirspaceMap,
    config: EnsembleConfig,
    lateral_minimum_nm: float = 5.0,
) -> RolloutSet:
    """Nominal + N perturbed + loss-of-comm rollouts for one plan revision.

    Perturbations are drawn deterministically from (seed, scenario index);
    counterfactual cuts start at the plan adoption time and repeat every
    cut_interval_s, taken from the nominal rollout's predicted states.
    """
    if config.n_perturbed < 1:
        raise TwinError("ensemble needs at least one perturbed rollout")
    callsigns = sorted(
        {st.callsign for st in start.states} | {st.callsign for _, st in start.entrants}
    )

    last_entry = max([t for t, _ in start.entrants], default=start.time_s)
    cut_times = []
    t_cut = start.time_s
    while t_cut <= start.time_s + config.horizon_s - 1e-9:
        cut_times.append(t_cut)
        t_cut += config.cut_interval_s

    nominal = simulate(
        plan, start, airspace, config.horizon_s, config.dt_s,
        NOMINAL_PERTURBATION, cut_times=cut_times,
        lateral_minimum_nm=lateral_minimum_nm,
    )

    perturbed = []
    for k in range(config.n_perturbed):
        rng = np.random.default_rng([config.seed, k])
        pert = sample_perturbation(
            f"perturbed-{k}", callsigns, rng,
            config.speed_band, config.max_pilot_delay_s,
        )
        perturbed.append(
            simulate(plan, start, airspace, config.horizon_s, config.dt_s, pert,
                     lateral_minimum_nm=lateral_minimum_nm)
        )

    counterfactuals = []
    for cut_t, snap in nominal.cut_snapshots:
        if not snap.states and cut_t > last_entry:
            continue  # empty sky at and after the cut
        counterfactuals.append(
            (cut_t, rollout_counterfactual(snap, config.counterfactual_duration_s,
                                           config.dt_s))
        )

    return RolloutSet(
        plan_revision=plan.revision,
        nominal=nominal,
        perturbed=perturbed,
        counterfactuals=counterfactuals,
    )
