"""Ranked deconfliction strategy library.

Each strategy is a generator of concrete manoeuvre pairs (complementary
actions for the two conflicting aircraft) with a bounded, deterministically
ordered parameterisation. The class table maps every one of the 36 conflict
classes to a non-empty priority-ordered strategy list; overtake classes
rank speed control and a single temporary lane offset ahead of level
changes, head-on classes rank the dual same-side offset first.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Mapping, Optional

from .conflict import (
    ConflictClass,
    ConflictRecord,
    LateralClass,
    SeparationMinima,
    SpeedClass,
    VerticalClass,
)
from .geometry import AirspaceMap, LaneDesignation
from .plans import (
    AircraftPassedLaterally,
    AirspacePlan,
    And,
    AtFix,
    Axis,
    AxisConstraint,
    ClimbTo,
    DescendTo,
    FlightPlan,
    FlyLane,
    Immediate,
    LateralSeparationExceeds,
    Manoeuvre,
    PlannedAction,
    ReachedLevel,
    SetSpeed,
)
from .twin import AircraftState

DUAL_OFFSET = "lateral-offset-same-side"
DESCEND_BELOW = "level-change-descend"
CLIMB_ABOVE = "level-change-climb"
EXCHANGE_LEVELS = "exchange-levels"
SPEED_TRAIL = "match-speed-trail"
SINGLE_OFFSET = "lateral-offset-single"

TABLE_PRIORITY = {
    DUAL_OFFSET: 1,
    DESCEND_BELOW: 2,
    CLIMB_ABOVE: 3,
    EXCHANGE_LEVELS: 4,
    SPEED_TRAIL: 5,
    SINGLE_OFFSET: 6,  # parameterised variant slot
}

TRAIL_GAP_NM = 10.0
TRAIL_RELEASE_NM = 15.0
FL_STEP = 10  # flight levels move on a 1000 ft grid
EXIT_APPROACH_NM = 5.0
#: resumption threshold of offset manoeuvres, as a multiple of the lateral
#: minimum: the offset holds until the pair has passed AND opened this much
#: room, so a slow overtake does not rejoin while barely clear
RESUME_SEPARATION_FACTOR = 2.0


class StrategyError(ValueError):
    pass


@dataclass(frozen=True)
class StrategyContext:
    """Everything a parameter generator may consult."""

    conflict: ConflictRecord
    plan: AirspacePlan
    airspace: AirspaceMap
    states: Mapping[str, AircraftState]  # states at plan time
    minima: SeparationMinima
    floor_fl: int
    ceiling_fl: int
    #: (callsign, axis) -> causal planned-action id, from attribution;
    #: generators use it to skip no-op parameterisations
    attribution: Mapping[tuple[str, Axis], str] = None

    def flight_plan(self, cs: str) -> FlightPlan:
        return self.plan.plan_for(cs)

    def causal_action(self, cs: str, axis: Axis):
        if not self.attribution:
            return None
        action_id = self.attribution.get((cs, axis))
        if action_id is None:
            return None
        return self.flight_plan(cs).find(action_id)

    def commanded_lane(self, cs: str):
        """The lane the plan currently directs this aircraft onto."""
        causal = self.causal_action(cs, Axis.LATERAL)
        if causal is not None and isinstance(causal.action, FlyLane):
            return causal.action.designation
        st = self.states.get(cs)
        return st.lane if st is not None else None

    def commanded_level(self, cs: str):
        causal = self.causal_action(cs, Axis.VERTICAL)
        if causal is not None:
            action = causal.action
            if isinstance(action, (ClimbTo, DescendTo)):
                return action.fl
        return None

    def cpa_level(self, cs: str) -> int:
        for at in self.conflict.at_cpa:
            if at.callsign == cs:
                return int(round(at.altitude_ft / (FL_STEP * 100.0))) * FL_STEP
        raise StrategyError(f"{cs} not part of the conflict pair")

    def cpa_speed(self, cs: str) -> float:
        for at in self.conflict.at_cpa:
            if at.callsign == cs:
                return at.ground_speed_kt
        raise StrategyError(f"{cs} not part of the conflict pair")


@dataclass(frozen=True)
class StrategyInstance:
    """One concrete, splice-ready parameterisation of a strategy."""

    strategy_id: str
    priority: int
    params: tuple[tuple[str, object], ...]
    manoeuvres: tuple[tuple[str, Manoeuvre], ...]
    constraints: tuple[AxisConstraint, ...]

    def footprint(self) -> dict[tuple[str, Axis], str]:
        return {(c.callsign, c.axis): c.direction for c in self.constraints}

    def label(self) -> str:
        ps = ", ".join(f"{k}={v}" for k, v in self.params)
        return f"{self.strategy_id}[{ps}]"


Generator = Callable[[StrategyContext], list[StrategyInstance]]


def _pa(cs: str, axis: str, strategy: str, rev: int, k: int, trigger, action,
        completion) -> PlannedAction:
    return PlannedAction(
        id=f"{cs}-{axis}-{strategy}-r{rev}-{k}",
        trigger=trigger,
        action=action,
        completion=completion,
        provenance=strategy,
    )


def _pair_of(ctx: StrategyContext) -> tuple[str, str]:
    return ctx.conflict.pair


def _passed_and_clear(ctx: StrategyContext, other: str):
    """Offset release: the pair has passed and opened the resumption margin."""
    return And((
        AircraftPassedLaterally(other),
        LateralSeparationExceeds(
            other, ctx.minima.lateral_nm * RESUME_SEPARATION_FACTOR
        ),
    ))


def _offset_phase(cs: str, other: str, ctx: StrategyContext, side: LaneDesignation,
                  strategy: str, k: int = 1) -> PlannedAction:
    fp = ctx.flight_plan(cs)
    return _pa(
        cs, "LAT", strategy, ctx.plan.revision, k,
        Immediate(),
        FlyLane(fp.route_id, side),
        _passed_and_clear(ctx, other),
    )


def gen_dual_offset(ctx: StrategyContext) -> list[StrategyInstance]:
    """Both aircraft offset to the same side of their own centrelines."""
    a, b = _pair_of(ctx)
    out = []
    for side in (LaneDesignation.LEFT, LaneDesignation.RIGHT):
        if ctx.commanded_lane(a) is side and ctx.commanded_lane(b) is side:
            continue  # the plan already directs both onto this side
        manoeuvres = []
        constraints = []
        for cs, other in ((a, b), (b, a)):
            phase = _offset_phase(cs, other, ctx, side, DUAL_OFFSET)
            manoeuvres.append(
                (cs, Manoeuvre(DUAL_OFFSET, (("side", side.value),), (phase,)))
            )
            constraints.append(
                AxisConstraint(cs, Axis.LATERAL, side.value,
                               _passed_and_clear(ctx, other), DUAL_OFFSET)
            )
        out.append(
            StrategyInstance(
                DUAL_OFFSET, TABLE_PRIORITY[DUAL_OFFSET],
                (("side", side.value),),
                tuple(manoeuvres), tuple(constraints),
            )
        )
    return out


def gen_single_offset(ctx: StrategyContext) -> list[StrategyInstance]:
    """One aircraft takes a temporary parallel lane (overtakes, catch-ups)."""
    a, b = _pair_of(ctx)
    # prefer moving the faster aircraft (the one doing the catching)
    movers = [a, b] if ctx.cpa_speed(a) >= ctx.cpa_speed(b) else [b, a]
    out = []
    for mover in movers:
        other = b if mover == a else a
        for side in (LaneDesignation.LEFT, LaneDesignation.RIGHT):
            if ctx.commanded_lane(mover) is side:
                continue  # already commanded onto this lane
            phase = _offset_phase(mover, other, ctx, side, SINGLE_OFFSET)
            m = Manoeuvre(SINGLE_OFFSET,
                          (("mover", mover), ("side", side.value)), (phase,))
            out.append(
                StrategyInstance(
                    SINGLE_OFFSET, TABLE_PRIORITY[SINGLE_OFFSET],
                    (("mover", mover), ("side", side.value)),
                    ((mover, m),),
                    (AxisConstraint(mover, Axis.LATERAL, side.value,
                                    _passed_and_clear(ctx, other), SINGLE_OFFSET),),
                )
            )
    return out


def _hold_until_tod(ctx: StrategyContext, cs: str, new_level_fl: int, default):
    """Completion for a level-change phase.

    When the plan carries a coordinated exit descent, the phase holds until
    a top-of-descent recomputed for the new cruise level (keeping whatever
    response margin the original trigger carried); the splice re-link then
    propagates the corrected trigger to the downstream descent. Plans with
    no exit descent fall back to the given default condition.
    """
    fp = ctx.flight_plan(cs)
    for pa in fp.chain(Axis.VERTICAL):
        if (isinstance(pa.action, DescendTo) and pa.action.fl == fp.exit_fl
                and isinstance(pa.trigger, AtFix)):
            st = ctx.states.get(cs)
            if st is None:
                return pa.trigger
            rate = st.climb_rate_fpm
            gs = st.ground_speed_kt
            analytic_old = gs * ((fp.pfl - fp.exit_fl) * 100.0 / rate) / 60.0
            margin = max(0.0, pa.trigger.tolerance_nm - analytic_old)
            analytic_new = gs * ((new_level_fl - fp.exit_fl) * 100.0 / rate) / 60.0
            return AtFix(pa.trigger.fix_id, max(0.1, analytic_new + margin))
    return default


def _level_change(ctx: StrategyContext, strategy: str, climb: bool) -> list[StrategyInstance]:
    a, b = _pair_of(ctx)
    la, lb = ctx.cpa_level(a), ctx.cpa_level(b)
    base = max(la, lb) if climb else min(la, lb)
    sign = 1 if climb else -1
    targets = []
    for k in (1, 2):
        fl = base + sign * k * FL_STEP
        if ctx.floor_fl <= fl <= ctx.ceiling_fl:
            targets.append(fl)

    def exit_ok(cs: str, target: int) -> bool:
        fp = ctx.flight_plan(cs)
        return target >= fp.exit_fl if not climb else True

    # prefer the mover whose coordinated exit stays reachable, then callsign
    movers = sorted(
        (a, b),
        key=lambda cs: (0 if all(exit_ok(cs, t) for t in targets[:1]) else 1, cs),
    )
    out = []
    for mover in movers:
        other = b if mover == a else a
        for target in targets:
            if ctx.commanded_level(mover) == target:
                continue  # already commanded to this level
            action = ClimbTo(target) if climb else DescendTo(target)
            completion = _hold_until_tod(ctx, mover, target,
                                         ReachedLevel(target))
            phase = _pa(mover, "VERT", strategy, ctx.plan.revision, 1,
                        Immediate(), action, completion)
            m = Manoeuvre(strategy, (("mover", mover), ("target_fl", target)),
                          (phase,))
            direction = "ClimbOnly" if climb else "DescendOnly"
            out.append(
                StrategyInstance(
                    strategy, TABLE_PRIORITY[strategy],
                    (("mover", mover), ("target_fl", target)),
                    ((mover, m),),
                    (AxisConstraint(mover, Axis.VERTICAL, direction,
                                    _passed_and_clear(ctx, other), strategy),),
                )
            )
    return out[:4]


def gen_descend_below(ctx: StrategyContext) -> list[StrategyInstance]:
    """One aircraft descends below the conflict flight level."""
    return _level_change(ctx, DESCEND_BELOW, climb=False)


def gen_climb_above(ctx: StrategyContext) -> list[StrategyInstance]:
    """One aircraft climbs above the conflict level (lower level unavailable)."""
    return _level_change(ctx, CLIMB_ABOVE, climb=True)


def gen_exchange_levels(ctx: StrategyContext) -> list[StrategyInstance]:
    """Separate laterally, pass each other vertically, rejoin own routes."""
    a, b = _pair_of(ctx)
    la, lb = ctx.cpa_level(a), ctx.cpa_level(b)
    if la == lb:
        return []  # nothing to exchange at a common level
    high, low = (a, b) if la > lb else (b, a)
    fl_high, fl_low = max(la, lb), min(la, lb)
    clear_of = LateralSeparationExceeds
    out = []
    for side in (LaneDesignation.LEFT, LaneDesignation.RIGHT):
        manoeuvres = []
        constraints = []
        for cs, other, v_action, v_target, v_dir in (
            (high, low, DescendTo(fl_low), fl_low, "DescendOnly"),
            (low, high, ClimbTo(fl_high), fl_high, "ClimbOnly"),
        ):
            fp = ctx.flight_plan(cs)
            passed = _passed_and_clear(ctx, other)
            lat1 = _pa(cs, "LAT", EXCHANGE_LEVELS, ctx.plan.revision, 1,
                       Immediate(), FlyLane(fp.route_id, side), passed)
            lat2 = _pa(cs, "LAT", EXCHANGE_LEVELS, ctx.plan.revision, 2,
                       passed, FlyLane(fp.route_id, LaneDesignation.CENTRE),
                       AtFix(fp.exit_fix, EXIT_APPROACH_NM))
            vert = _pa(cs, "VERT", EXCHANGE_LEVELS, ctx.plan.revision, 3,
                       clear_of(other, ctx.minima.lateral_nm + 1.0),
                       v_action,
                       _hold_until_tod(ctx, cs, v_target,
                                       ReachedLevel(v_target)))
            manoeuvres.append(
                (cs, Manoeuvre(EXCHANGE_LEVELS,
                               (("side", side.value), ("target_fl", v_target)),
                               (lat1, lat2, vert)))
            )
            constraints.append(AxisConstraint(cs, Axis.LATERAL, side.value,
                                              passed, EXCHANGE_LEVELS))
            constraints.append(AxisConstraint(cs, Axis.VERTICAL, v_dir,
                                              passed, EXCHANGE_LEVELS))
        out.append(
            StrategyInstance(
                EXCHANGE_LEVELS, TABLE_PRIORITY[EXCHANGE_LEVELS],
                (("side", side.value),),
                tuple(manoeuvres), tuple(constraints),
            )
        )
    return out


def gen_speed_trail(ctx: StrategyContext) -> list[StrategyInstance]:
    """Follower matches the leader's speed and trails on the same track."""
    a, b = _pair_of(ctx)
    sa, sb = ctx.states.get(a), ctx.states.get(b)
    if sa is None or sb is None:
        return []
    # order along the first aircraft's route decides who leads
    centre = ctx.airspace.centre(sa.route_id).path
    s_a, _ = centre.project_near(sa.x, sa.y, sa.seg_idx)
    s_b, _ = centre.project_near(sb.x, sb.y, sb.seg_idx)
    leader, follower = (a, b) if s_a >= s_b else (b, a)
    gap = abs(s_a - s_b)
    if gap < TRAIL_GAP_NM:
        return []  # too close to freeze the spacing
    lead_state = ctx.states[leader]
    target_kt = min(max(lead_state.ground_speed_kt, 250.0), 600.0)
    follower_cmd = ctx.states[follower].ground_speed_kt
    for pa in ctx.flight_plan(follower).chain(Axis.SPEED):
        if isinstance(pa.action, SetSpeed):
            follower_cmd = pa.action.kt
    if abs(follower_cmd - target_kt) < 1.0:
        return []  # matching speeds would change nothing
    phase = _pa(follower, "SPD", SPEED_TRAIL, ctx.plan.revision, 1,
                Immediate(), SetSpeed(target_kt), Immediate())
    m = Manoeuvre(SPEED_TRAIL,
                  (("follower", follower), ("target_kt", target_kt)), (phase,))
    release = LateralSeparationExceeds(leader, TRAIL_RELEASE_NM)
    return [
        StrategyInstance(
            SPEED_TRAIL, TABLE_PRIORITY[SPEED_TRAIL],
            (("follower", follower), ("target_kt", target_kt),
             ("gap_nm", round(gap, 1))),
            ((follower, m),),
            (AxisConstraint(follower, Axis.SPEED, "SlowOnly", release,
                            SPEED_TRAIL),),
        )
    ]


GENERATORS: dict[str, Generator] = {
    DUAL_OFFSET: gen_dual_offset,
    DESCEND_BELOW: gen_descend_below,
    CLIMB_ABOVE: gen_climb_above,
    EXCHANGE_LEVELS: gen_exchange_levels,
    SPEED_TRAIL: gen_speed_trail,
    SINGLE_OFFSET: gen_single_offset,
}


def default_class_table() -> dict[tuple[str, str, str], tuple[str, ...]]:
    """Priority-ordered strategy ids for each of the 36 conflict classes."""
    table = {}
    for v in VerticalClass:
        exchange = (EXCHANGE_LEVELS,) if v is not VerticalClass.LL else ()
        for lat in LateralClass:
            for s in SpeedClass:
                if lat is LateralClass.HO:
                    order = (DUAL_OFFSET, DESCEND_BELOW, CLIMB_ABOVE) + exchange
                elif lat is LateralClass.CR:
                    order = (DESCEND_BELOW, CLIMB_ABOVE) + exchange + (DUAL_OFFSET,)
                elif s is SpeedClass.SIMILAR:
                    order = (SINGLE_OFFSET, DESCEND_BELOW, CLIMB_ABOVE,
                             SPEED_TRAIL) + exchange
                else:
                    # overtake / catch-up: speed control or a temporary lane
                    # offset come before level changes
                    order = (SPEED_TRAIL, SINGLE_OFFSET, DESCEND_BELOW,
                             CLIMB_ABOVE) + exchange
                table[(v.value, lat.value, s.value)] = order
    return table


@dataclass(frozen=True)
class StrategyLibrary:
    table: Mapping[tuple[str, str, str], tuple[str, ...]]
    generators: Mapping[str, Generator]

    def __post_init__(self):
        for cls in _all_class_keys():
            ids = self.table.get(cls)
            if not ids:
                raise StrategyError(f"class {cls} has no strategies")
            for sid in ids:
                if sid not in self.generators:
                    raise StrategyError(f"unknown strategy id {sid!r} for {cls}")

    def strategies_for(self, conflict_class: ConflictClass) -> tuple[str, ...]:
        return tuple(self.table[conflict_class.key()])


def _all_class_keys():
    return [
        (v.value, l.value, s.value)
        for v in VerticalClass for l in LateralClass for s in SpeedClass
    ]


def default_library() -> StrategyLibrary:
    return StrategyLibrary(table=default_class_table(), generators=GENERATORS)


def get_strategies(
    conflict_class: ConflictClass,
    ctx: StrategyContext,
    library: Optional[StrategyLibrary] = None,
) -> list[StrategyInstance]:
    """Concrete candidate list for a conflict, in library priority order."""
    lib = library or default_library()
    out: list[StrategyInstance] = []
    for sid in lib.strategies_for(conflict_class):
        out.extend(lib.generators[sid](ctx))
    return out
