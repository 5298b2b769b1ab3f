"""Hierarchical control plans.

Five layers: atomic Conditions and Actions, Planned Actions (trigger/action/
completion units), Manoeuvres (phased multi-action solutions), per-aircraft
FlightPlans (one action chain per control axis) and the sector-wide
AirspacePlan. Plans are immutable values; every modification (splice,
constraint registration) returns a new revision, which makes undo in the
search a snapshot restore.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Iterable, Mapping, Optional, Sequence

from .geometry import AirspaceMap, LaneDesignation

LEVEL_CAPTURE_FT = 100.0  # |altitude - commanded level| treated as "reached"
SPEED_ENVELOPE_KT = (250.0, 600.0)


class PlanError(ValueError):
    """Invalid plan construction or splice."""


class PlanIntegrityError(PlanError):
    """A plan invariant (single active action per axis, monotonicity) broke."""


class InfeasiblePlanError(PlanError):
    """No nominal plan satisfies the coordinated exit condition."""


class Axis(str, Enum):
    LATERAL = "Lateral"
    VERTICAL = "Vertical"
    SPEED = "Speed"


class ActionStatus(str, Enum):
    PENDING = "Pending"
    ACTIVE = "Active"
    COMPLETE = "Complete"


# ---------------------------------------------------------------------------
# Conditions
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PassageRecord:
    """Along-track relation of an aircraft pair since plan adoption."""

    initial_sign: int
    passed: bool = False


class PassageHistory:
    """Latched pair-passage records, keyed by ordered (subject, other).

    Also remembers every callsign ever observed, so conditions referencing an
    aircraft that has since left the sector stay evaluable.
    """

    __slots__ = ("records", "seen")

    def __init__(self, records: Optional[dict] = None, seen: Optional[set] = None):
        self.records: dict[tuple[str, str], PassageRecord] = dict(records or {})
        self.seen: set[str] = set(seen or ())

    def copy(self) -> "PassageHistory":
        return PassageHistory(self.records, self.seen)

    def knows(self, callsign: str) -> bool:
        return callsign in self.seen or any(callsign in key for key in self.records)

    def passed(self, subject: str, other: str) -> bool:
        rec = self.records.get((subject, other))
        return bool(rec and rec.passed)

    def observe(self, subject: str, other: str, along_delta: float, separation_nm: float,
                min_separation_nm: float) -> None:
        sign = 1 if along_delta >= 0 else -1
        rec = self.records.get((subject, other))
        if rec is None:
            self.records[(subject, other)] = PassageRecord(sign)
            return
        if not rec.passed and sign != rec.initial_sign and separation_nm >= min_separation_nm:
            self.records[(subject, other)] = PassageRecord(rec.initial_sign, True)


@dataclass(frozen=True)
class Snapshot:
    """A point-in-time view of the airspace used for condition evaluation."""

    time_s: float
    states: Mapping[str, "object"]  # callsign -> AircraftState-like


@dataclass(frozen=True)
class EvalContext:
    """Flat evaluation context; the simulator reuses a mutable duck-typed twin."""

    subject: str
    time_s: float
    states: Mapping[str, "object"]
    history: PassageHistory
    airspace: AirspaceMap
    lateral_minimum_nm: float = 5.0


class ConditionError(PlanError):
    """Condition references an unknown aircraft."""


class Condition:
    def evaluate(self, ctx: EvalContext) -> bool:
        raise NotImplementedError


@dataclass(frozen=True)
class Immediate(Condition):
    def evaluate(self, ctx: EvalContext) -> bool:
        return True


@dataclass(frozen=True)
class TimeReached(Condition):
    time_s: float

    def evaluate(self, ctx: EvalContext) -> bool:
        return ctx.time_s >= self.time_s


@dataclass(frozen=True)
class AtFix(Condition):
    """Within tolerance_nm of the fix, measured along the own-route centreline.

    Along-track distance keeps the trigger exact for aircraft flying an
    offset lane and robust to along-track speed variation.
    """

    fix_id: str
    tolerance_nm: float

    def evaluate(self, ctx: EvalContext) -> bool:
        state = _state_of(ctx, ctx.subject)
        s_fix = ctx.airspace.fix_along_route(state.route_id, self.fix_id)
        return abs(s_fix - state.s_centre_nm) <= self.tolerance_nm


@dataclass(frozen=True)
class LateralSeparationExceeds(Condition):
    other: str
    threshold_nm: float

    def __post_init__(self):
        if self.threshold_nm <= 0:
            raise PlanError("separation threshold must be positive")

    def evaluate(self, ctx: EvalContext) -> bool:
        me = _state_of(ctx, ctx.subject)
        other = ctx.states.get(self.other)
        if other is None:
            if ctx.history.knows(self.other):
                return True  # the other aircraft has left the sector
            raise ConditionError(f"unknown callsign {self.other!r}")
        return math.hypot(me.x - other.x, me.y - other.y) > self.threshold_nm


@dataclass(frozen=True)
class AircraftPassedLaterally(Condition):
    """True once the pair's along-track order has flipped since adoption.

    The relative position is projected on the subject's route centreline and
    the flip only latches once horizontal separation is at or above the
    lateral minimum (both recorded by the simulation's passage history).
    """

    other: str

    def evaluate(self, ctx: EvalContext) -> bool:
        if ctx.history.passed(ctx.subject, self.other):
            return True
        if self.other not in ctx.states:
            if ctx.history.knows(self.other):
                return True
            raise ConditionError(f"unknown callsign {self.other!r}")
        return False


@dataclass(frozen=True)
class ReachedLevel(Condition):
    fl: int

    def evaluate(self, ctx: EvalContext) -> bool:
        state = _state_of(ctx, ctx.subject)
        return abs(state.altitude_ft - self.fl * 100.0) <= LEVEL_CAPTURE_FT


@dataclass(frozen=True)
class Not(Condition):
    inner: Condition

    def evaluate(self, ctx: EvalContext) -> bool:
        return not self.inner.evaluate(ctx)


@dataclass(frozen=True)
class And(Condition):
    terms: tuple[Condition, ...]

    def evaluate(self, ctx: EvalContext) -> bool:
        return all(t.evaluate(ctx) for t in self.terms)


@dataclass(frozen=True)
class Or(Condition):
    terms: tuple[Condition, ...]

    def evaluate(self, ctx: EvalContext) -> bool:
        return any(t.evaluate(ctx) for t in self.terms)


def _state_of(ctx: EvalContext, callsign: str):
    state = ctx.states.get(callsign)
    if state is None:
        raise ConditionError(f"unknown callsign {callsign!r}")
    return state


def evaluate_condition(
    condition: Condition,
    subject: str,
    snapshot: Snapshot,
    history: PassageHistory,
    airspace: AirspaceMap,
    lateral_minimum_nm: float = 5.0,
) -> bool:
    """Evaluate a condition for one aircraft against a state snapshot."""
    ctx = EvalContext(subject, snapshot.time_s, snapshot.states, history, airspace, lateral_minimum_nm)
    return condition.evaluate(ctx)


# ---------------------------------------------------------------------------
# Actions
# ---------------------------------------------------------------------------


class Action:
    axis: Axis

    def phrase(self) -> str:
        raise NotImplementedError


@dataclass(frozen=True)
class ClimbTo(Action):
    fl: int
    axis = Axis.VERTICAL

    def phrase(self) -> str:
        return f"climb FL{self.fl}"


@dataclass(frozen=True)
class DescendTo(Action):
    fl: int
    axis = Axis.VERTICAL

    def phrase(self) -> str:
        return f"descend FL{self.fl}"


@dataclass(frozen=True)
class SetSpeed(Action):
    kt: float
    axis = Axis.SPEED

    def __post_init__(self):
        lo, hi = SPEED_ENVELOPE_KT
        if not (lo <= self.kt <= hi):
            raise PlanError(f"commanded speed {self.kt} kt outside [{lo}, {hi}]")

    def phrase(self) -> str:
        return f"speed {self.kt:.0f} knots"


@dataclass(frozen=True)
class FlyLane(Action):
    route_id: str
    designation: LaneDesignation
    axis = Axis.LATERAL

    def phrase(self) -> str:
        return f"fly {self.designation.value.lower()} lane of {self.route_id}"


@dataclass(frozen=True)
class ResumeNav(Action):
    """Rejoin the route centreline and proceed to the named fix."""

    fix_id: str
    axis = Axis.LATERAL

    def phrase(self) -> str:
        return f"resume own navigation to {self.fix_id}"


# ---------------------------------------------------------------------------
# Planned actions, manoeuvres, flight plans
# ---------------------------------------------------------------------------


NOMINAL_PROVENANCE = "nominal"


@dataclass(frozen=True)
class PlannedAction:
    id: str
    trigger: Condition
    action: Action
    completion: Condition
    status: ActionStatus = ActionStatus.PENDING
    provenance: str = NOMINAL_PROVENANCE

    @property
    def axis(self) -> Axis:
        return self.action.axis


@dataclass(frozen=True)
class Manoeuvre:
    """A parameterised phase sequence implementing one deconfliction strategy.

    On each axis, every phase after the first must be triggered by the prior
    phase's completion.
    """

    strategy_id: str
    parameters: tuple[tuple[str, object], ...]
    phases: tuple[PlannedAction, ...]

    def __post_init__(self):
        if not self.phases:
            raise PlanError("manoeuvre must have at least one phase")
        for axis in self.axes():
            chain = [p for p in self.phases if p.axis is axis]
            for prev, nxt in zip(chain, chain[1:]):
                if nxt.trigger != prev.completion:
                    raise PlanError(
                        f"manoeuvre {self.strategy_id!r}: phase {nxt.id!r} is not "
                        "chained to its predecessor's completion"
                    )

    def axes(self) -> set[Axis]:
        return {p.axis for p in self.phases}

    def phases_on(self, axis: Axis) -> tuple[PlannedAction, ...]:
        return tuple(p for p in self.phases if p.axis is axis)

    def final_completion(self, axis: Axis) -> Condition:
        return self.phases_on(axis)[-1].completion


@dataclass(frozen=True)
class AxisConstraint:
    """Monotonic direction lock on one control axis of one aircraft."""

    callsign: str
    axis: Axis
    direction: str  # Left / Right / ClimbOnly / DescendOnly / SlowOnly / FastOnly
    release: Condition
    source_strategy: str = ""


OPPOSING_DIRECTIONS = {
    "Left": "Right",
    "Right": "Left",
    "ClimbOnly": "DescendOnly",
    "DescendOnly": "ClimbOnly",
    "SlowOnly": "FastOnly",
    "FastOnly": "SlowOnly",
}


@dataclass(frozen=True)
class FlightPlan:
    callsign: str
    route_id: str
    exit_fix: str
    exit_fl: int
    pfl: int
    chains: tuple[tuple[Axis, tuple[PlannedAction, ...]], ...]

    def chain(self, axis: Axis) -> tuple[PlannedAction, ...]:
        for ax, chain in self.chains:
            if ax is axis:
                return chain
        return ()

    def all_actions(self) -> tuple[PlannedAction, ...]:
        return tuple(pa for _, chain in self.chains for pa in chain)

    def find(self, action_id: str) -> Optional[PlannedAction]:
        for pa in self.all_actions():
            if pa.id == action_id:
                return pa
        return None

    def with_chain(self, axis: Axis, chain: Sequence[PlannedAction]) -> "FlightPlan":
        updated = []
        seen = False
        for ax, old in self.chains:
            if ax is axis:
                updated.append((ax, tuple(chain)))
                seen = True
            else:
                updated.append((ax, old))
        if not seen:
            updated.append((axis, tuple(chain)))
        return replace(self, chains=tuple(updated))


def make_chains(
    lateral: Sequence[PlannedAction] = (),
    vertical: Sequence[PlannedAction] = (),
    speed: Sequence[PlannedAction] = (),
) -> tuple[tuple[Axis, tuple[PlannedAction, ...]], ...]:
    return (
        (Axis.LATERAL, tuple(lateral)),
        (Axis.VERTICAL, tuple(vertical)),
        (Axis.SPEED, tuple(speed)),
    )


@dataclass(frozen=True)
class AirspacePlan:
    """The coordinated set of flight plans for every controlled aircraft."""

    plans: tuple[tuple[str, FlightPlan], ...]
    constraints: tuple[AxisConstraint, ...] = ()
    revision: int = 0

    def plan_for(self, callsign: str) -> FlightPlan:
        for cs, fp in self.plans:
            if cs == callsign:
                return fp
        raise PlanError(f"no flight plan for {callsign!r}")

    def has(self, callsign: str) -> bool:
        return any(cs == callsign for cs, _ in self.plans)

    def callsigns(self) -> tuple[str, ...]:
        return tuple(cs for cs, _ in self.plans)

    def with_plan(self, fp: FlightPlan, bump: bool = True) -> "AirspacePlan":
        entries = [(cs, fp if cs == fp.callsign else old) for cs, old in self.plans]
        if not any(cs == fp.callsign for cs, _ in self.plans):
            entries.append((fp.callsign, fp))
            entries.sort(key=lambda e: e[0])
        return replace(
            self,
            plans=tuple(entries),
            revision=self.revision + 1 if bump else self.revision,
        )

    def without(self, callsign: str) -> "AirspacePlan":
        entries = tuple((cs, fp) for cs, fp in self.plans if cs != callsign)
        constraints = tuple(c for c in self.constraints if c.callsign != callsign)
        return replace(self, plans=entries, constraints=constraints)

    def constraint_on(self, callsign: str, axis: Axis) -> Optional[AxisConstraint]:
        for c in self.constraints:
            if c.callsign == callsign and c.axis is axis:
                return c
        return None

    def with_constraint(self, constraint: AxisConstraint) -> "AirspacePlan":
        existing = self.constraint_on(constraint.callsign, constraint.axis)
        if existing is not None:
            if OPPOSING_DIRECTIONS.get(existing.direction) == constraint.direction:
                raise PlanIntegrityError(
                    f"opposing constraint on ({constraint.callsign}, "
                    f"{constraint.axis.value}): {existing.direction} vs "
                    f"{constraint.direction}"
                )
            others = tuple(c for c in self.constraints if c is not existing)
            return replace(self, constraints=others + (constraint,))
        return replace(self, constraints=self.constraints + (constraint,))


# ---------------------------------------------------------------------------
# Nominal plan construction
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PerformanceParams:
    climb_rate_fpm: float = 2000.0
    descent_rate_fpm: float = 2000.0
    response_margin_s: float = 0.0  # planner buffer for pilot response latency


@dataclass(frozen=True)
class EntryState:
    callsign: str
    route_id: str
    entry_fl: int
    ground_speed_kt: float
    entry_s_nm: float = 0.0


EXIT_APPROACH_NM = 5.0  # hand the exit clearance this far before the fix
EXIT_CAPTURE_NM = 0.3


def tod_trigger_distance_nm(
    from_fl: int, exit_fl: int, gs_kt: float, perf: PerformanceParams
) -> float:
    """Latest distance before the exit fix at which a descent still meets it."""
    descent_ft = (from_fl - exit_fl) * 100.0
    distance = gs_kt * (descent_ft / perf.descent_rate_fpm) / 60.0
    return distance + gs_kt * perf.response_margin_s / 3600.0


def build_nominal_plan(
    entry: EntryState,
    airspace: AirspaceMap,
    pfl: int,
    exit_condition: "object",
    perf: PerformanceParams = PerformanceParams(),
) -> FlightPlan:
    """Most efficient conflict-free-by-assumption plan from entry to exit.

    Lateral: fly the route's centre lane, then resume own navigation at the
    exit fix. Vertical: climb to (or hold) the preferred flight level, then a
    continuous descent triggered at the latest point that still captures the
    coordinated exit level. Speed: no actions.
    """
    route_id = entry.route_id
    exit_fix = exit_condition.fix_id
    exit_fl = exit_condition.flight_level
    if pfl < exit_fl:
        raise InfeasiblePlanError(
            f"{entry.callsign}: preferred level FL{pfl} below coordinated exit FL{exit_fl}"
        )
    s_exit = airspace.fix_along_route(route_id, exit_fix)
    cs = entry.callsign

    lateral = [
        PlannedAction(
            id=f"{cs}-LAT-1",
            trigger=Immediate(),
            action=FlyLane(route_id, LaneDesignation.CENTRE),
            completion=AtFix(exit_fix, EXIT_APPROACH_NM),
        ),
        PlannedAction(
            id=f"{cs}-LAT-2",
            trigger=AtFix(exit_fix, EXIT_APPROACH_NM),
            action=ResumeNav(exit_fix),
            completion=AtFix(exit_fix, EXIT_CAPTURE_NM),
        ),
    ]

    vertical: list[PlannedAction] = []
    needs_descent = exit_fl < pfl
    needs_climb = entry.entry_fl != pfl
    if needs_descent:
        tod_nm = tod_trigger_distance_nm(pfl, exit_fl, entry.ground_speed_kt, perf)
        if s_exit - entry.entry_s_nm < tod_nm:
            raise InfeasiblePlanError(
                f"{entry.callsign}: exit FL{exit_fl} unreachable at "
                f"{perf.descent_rate_fpm:.0f} ft/min before {exit_fix} "
                f"(needs {tod_nm:.1f} NM, has {s_exit - entry.entry_s_nm:.1f} NM)"
            )
        tod = AtFix(exit_fix, tod_nm)
        hold_action = ClimbTo(pfl) if entry.entry_fl <= pfl else DescendTo(pfl)
        vertical.append(
            PlannedAction(
                id=f"{cs}-VERT-1",
                trigger=Immediate(),
                action=hold_action,
                completion=tod,
            )
        )
        vertical.append(
            PlannedAction(
                id=f"{cs}-VERT-2",
                trigger=tod,
                action=DescendTo(exit_fl),
                completion=ReachedLevel(exit_fl),
            )
        )
    elif needs_climb:
        action = ClimbTo(pfl) if entry.entry_fl < pfl else DescendTo(pfl)
        vertical.append(
            PlannedAction(
                id=f"{cs}-VERT-1",
                trigger=Immediate(),
                action=action,
                completion=ReachedLevel(pfl),
            )
        )

    return FlightPlan(
        callsign=cs,
        route_id=route_id,
        exit_fix=exit_fix,
        exit_fl=exit_fl,
        pfl=pfl,
        chains=make_chains(lateral, vertical, ()),
    )


# ---------------------------------------------------------------------------
# Splicing
# ---------------------------------------------------------------------------


def splice(fp: FlightPlan, causal_ids: Sequence[str], manoeuvre: Manoeuvre) -> FlightPlan:
    """Replace the causal plan segment with a manoeuvre's phases.

    Only the axes the manoeuvre touches change. On each such axis the causal
    actions are replaced in place (or, for an axis with no remaining actions,
    the phases are inserted at the running end of the chain); every other
    planned action is preserved with identical id and content. A downstream
    action whose trigger was the causal segment's completion is re-linked to
    the manoeuvre's final completion on that axis.
    """
    if not manoeuvre.phases:
        raise PlanError("cannot splice an empty manoeuvre")
    causal = list(causal_ids)
    for cid in causal:
        if fp.find(cid) is None:
            raise PlanError(f"causal action {cid!r} not found in plan of {fp.callsign}")

    causal_axes = {fp.find(cid).axis for cid in causal}
    touched = manoeuvre.axes()
    for axis in causal_axes - touched:
        raise PlanError(
            f"axis mismatch: causal segment includes {axis.value} but the "
            f"manoeuvre does not touch it"
        )

    new_fp = fp
    for axis in (Axis.LATERAL, Axis.VERTICAL, Axis.SPEED):
        if axis not in touched:
            continue
        phases = manoeuvre.phases_on(axis)
        chain = list(fp.chain(axis))
        idx = [i for i, pa in enumerate(chain) if pa.id in causal]
        if idx:
            if idx != list(range(idx[0], idx[0] + len(idx))):
                raise PlanError("causal actions must be contiguous within an axis chain")
            start, stop = idx[0], idx[-1] + 1
            old_completion = chain[stop - 1].completion
            new_chain = chain[:start] + list(phases) + chain[stop:]
            # re-link the first downstream action that chained off the segment
            after = start + len(phases)
            if after < len(new_chain) and new_chain[after].trigger == old_completion:
                new_chain[after] = replace(
                    new_chain[after], trigger=manoeuvre.final_completion(axis)
                )
        elif chain:
            # no causal action on this axis: only an exhausted/parallel insert
            # at the end of the chain is well-defined
            new_chain = chain + list(phases)
        else:
            new_chain = list(phases)
        new_fp = new_fp.with_chain(axis, new_chain)
    return new_fp


# ---------------------------------------------------------------------------
# Runtime queries over plans
# ---------------------------------------------------------------------------


def active_actions(
    fp: FlightPlan,
    snapshot: Snapshot,
    history: PassageHistory,
    airspace: AirspaceMap,
    lateral_minimum_nm: float = 5.0,
) -> dict[Axis, PlannedAction]:
    """The unique currently-active action per axis, judged from a snapshot.

    An action is complete when its completion condition holds, active when
    its trigger holds but its completion does not, and pending otherwise.
    Raises PlanIntegrityError if two actions on one axis are active at once.
    """
    ctx = EvalContext(fp.callsign, snapshot.time_s, snapshot.states, history, airspace, lateral_minimum_nm)
    out: dict[Axis, PlannedAction] = {}
    for axis, chain in fp.chains:
        active: Optional[PlannedAction] = None
        for pa in chain:
            if pa.completion.evaluate(ctx):
                continue
            if pa.trigger.evaluate(ctx):
                if active is not None:
                    raise PlanIntegrityError(
                        f"{fp.callsign}: two active actions on {axis.value} "
                        f"({active.id}, {pa.id})"
                    )
                active = pa
        if active is not None:
            out[axis] = active
    return out


# ---------------------------------------------------------------------------
# Axis-constraint machinery
# ---------------------------------------------------------------------------


def filter_by_axis_constraints(
    candidates: Sequence["object"],
    constraints: Sequence[AxisConstraint],
    pair: tuple[str, str],
) -> list:
    """Drop strategy instances that oppose an un-released axis constraint.

    Candidates expose footprint() -> {(callsign, Axis): direction}. Instances
    whose direction matches the constraint (reinforcement) pass; instances
    with no footprint on a constrained axis pass.
    """
    if not constraints:
        return list(candidates)
    locked = {(c.callsign, c.axis): c.direction for c in constraints}
    kept = []
    for cand in candidates:
        ok = True
        for key, direction in cand.footprint().items():
            want = locked.get(key)
            if want is not None and direction != want:
                ok = False
                break
        if ok:
            kept.append(cand)
    return kept


def release_constraints(
    constraints: Sequence[AxisConstraint],
    snapshot: Snapshot,
    history: PassageHistory,
    airspace: AirspaceMap,
    lateral_minimum_nm: float = 5.0,
) -> tuple[AxisConstraint, ...]:
    """Remove constraints whose release condition now holds."""
    kept = []
    for c in constraints:
        try:
            released = evaluate_condition(
                c.release, c.callsign, snapshot, history, airspace, lateral_minimum_nm
            )
        except ConditionError:
            released = False
        if not released:
            kept.append(c)
    return tuple(kept)
