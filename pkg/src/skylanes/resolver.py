"""Airspace-wide conflict resolution by depth-limited backtracking search.

Each node of the search ensemble-simulates the candidate airspace plan and
compiles its Technical Safety Record. An empty record is a complete safe
plan and is accepted greedily (first solution wins). Otherwise the earliest
predicted conflict is attributed to the responsible planned actions, the
class-ranked strategy candidates are filtered against monotonic axis
constraints, and each surviving candidate is spliced in and explored one
level deeper. Exhaustion falls back to a conservative safe-flight-level
manoeuvre plus a human-intervention alert.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Mapping, Optional, Sequence

from .conflict import (
    ClassThresholds,
    ConflictError,
    ConflictRecord,
    RolloutSource,
    SeparationMinima,
    TechnicalSafetyRecord,
    detect,
    earliest_conflict,
)
from .geometry import AirspaceMap
from .plans import (
    AirspacePlan,
    Axis,
    ClimbTo,
    DescendTo,
    FlightPlan,
    Immediate,
    PlanIntegrityError,
    PlannedAction,
    ReachedLevel,
    filter_by_axis_constraints,
    splice,
)
from .strategies import (
    StrategyContext,
    StrategyInstance,
    StrategyLibrary,
    default_library,
    get_strategies,
)
from .twin import (
    EnsembleConfig,
    RolloutSet,
    TwinStart,
    simulate_ensemble,
)

FALLBACK_PROVENANCE = "fallback-safe-level"
FL_STEP = 10


class ResolverError(RuntimeError):
    pass


@dataclass(frozen=True)
class SearchParams:
    max_depth: int = 3
    branch_cap: int = 8
    expansion_budget: int = 500

    def __post_init__(self):
        if self.max_depth < 1:
            raise ResolverError("max_depth must be >= 1")

    def worst_case_expansions(self, branching: int) -> int:
        b = min(branching, self.branch_cap)
        return sum(b**i for i in range(1, self.max_depth + 1))


# ---------------------------------------------------------------------------
# Causal attribution
# ---------------------------------------------------------------------------


def _source_rollout(conflict: ConflictRecord, rollouts: RolloutSet):
    src = conflict.source
    if src.kind == "nominal":
        return rollouts.nominal
    if src.kind == "perturbed":
        return rollouts.perturbed[int(src.key)]
    for cut_t, r in rollouts.counterfactuals:
        if abs(cut_t - src.key) < 1e-6:
            return r
    raise ResolverError(f"conflict source {src} not present in rollout set")


def attribute_cause(
    conflict: ConflictRecord,
    plan: AirspacePlan,
    rollouts: RolloutSet,
) -> dict[tuple[str, Axis], str]:
    """Planned action controlling each axis of each aircraft at t_first.

    Reads the trigger-firing log of the conflict's source rollout: the
    causal action on an axis is the one fired at or before t_first and not
    yet complete. Future or pending actions are never attributed. Axes with
    no active action (an empty or exhausted chain) simply have no entry.
    """
    if rollouts.plan_revision != plan.revision:
        raise ResolverError("conflict derives from a different plan revision")
    rollout = _source_rollout(conflict, rollouts)
    t = conflict.t_first_s
    out: dict[tuple[str, Axis], str] = {}
    for cs in conflict.pair:
        traj = rollout.trajectories.get(cs)
        if traj is None:
            continue
        fp = plan.plan_for(cs)
        for axis in (Axis.LATERAL, Axis.VERTICAL):
            active = []
            for pa in fp.chain(axis):
                timing = traj.timings.get(pa.id)
                if timing is None or timing.fired_s > t + 1e-9:
                    continue
                if timing.completed_s is not None and timing.completed_s <= t + 1e-9:
                    continue
                active.append(pa.id)
            if len(active) > 1:
                raise PlanIntegrityError(
                    f"{cs}: {len(active)} active actions on {axis.value} at "
                    f"t={t:.0f}s: {active}"
                )
            if active:
                out[(cs, axis)] = active[0]
    return out


# ---------------------------------------------------------------------------
# Strategy application
# ---------------------------------------------------------------------------


def apply_strategy(
    plan: AirspacePlan,
    instance: StrategyInstance,
    conflict: ConflictRecord,
    attribution: Mapping[tuple[str, Axis], str],
) -> AirspacePlan:
    """Splice a strategy instance into both plans and register its constraints.

    Returns a new plan revision; the input plan is untouched (undo in the
    search is a restore of the parent revision).
    """
    new_plan = plan
    for cs, manoeuvre in instance.manoeuvres:
        fp = plan.plan_for(cs)
        causal = [
            attribution[(cs, axis)]
            for axis in manoeuvre.axes()
            if (cs, axis) in attribution
        ]
        new_fp = splice(fp, causal, manoeuvre)
        new_plan = new_plan.with_plan(new_fp, bump=False)
    for constraint in instance.constraints:
        new_plan = new_plan.with_constraint(constraint)
    return replace(new_plan, revision=plan.revision + 1)


# ---------------------------------------------------------------------------
# Decision trace
# ---------------------------------------------------------------------------


@dataclass
class Attempt:
    strategy_id: str
    label: str
    child_node: Optional[int]
    outcome: str  # "accepted" | "rejected" | "budget"
    footprint: dict = None  # {(callsign, axis value): direction}


@dataclass
class TraceNode:
    node_id: int
    depth: int
    parent_id: Optional[int]
    plan_revision: int
    tsr_size: int
    conflict: Optional[dict] = None
    filtered_out: list[str] = field(default_factory=list)
    attempts: list[Attempt] = field(default_factory=list)
    outcome: str = "open"

    def to_json(self) -> dict:
        return {
            "node_id": self.node_id,
            "depth": self.depth,
            "parent_id": self.parent_id,
            "plan_revision": self.plan_revision,
            "tsr_size": self.tsr_size,
            "conflict": self.conflict,
            "filtered_out": list(self.filtered_out),
            "attempts": [
                {
                    "strategy": a.strategy_id,
                    "label": a.label,
                    "child_node": a.child_node,
                    "outcome": a.outcome,
                    "footprint": [
                        [cs, axis, direction]
                        for (cs, axis), direction in sorted(
                            (a.footprint or {}).items()
                        )
                    ],
                }
                for a in self.attempts
            ],
            "outcome": self.outcome,
        }


@dataclass
class DecisionTrace:
    nodes: list[TraceNode] = field(default_factory=list)

    def new_node(self, depth, parent_id, plan_revision, tsr_size) -> TraceNode:
        node = TraceNode(len(self.nodes), depth, parent_id, plan_revision, tsr_size)
        self.nodes.append(node)
        return node

    def accepted_path(self) -> list[Attempt]:
        """The chain of accepted strategy applications, root to leaf."""
        out = []
        node = self.nodes[0] if self.nodes else None
        while node is not None:
            nxt = None
            for a in node.attempts:
                if a.outcome == "accepted":
                    out.append(a)
                    nxt = self.nodes[a.child_node]
                    break
            node = nxt
        return out

    def applied_strategies(self) -> list[str]:
        return [a.strategy_id for a in self.accepted_path()]

    def max_depth_reached(self) -> int:
        return max((n.depth for n in self.nodes), default=0)

    def to_json(self) -> dict:
        return {"nodes": [n.to_json() for n in self.nodes]}


@dataclass
class SearchStats:
    expansions: int = 0
    simulations: int = 0  # ensemble verifications run
    rollouts: int = 0     # individual rollouts across all verifications


@dataclass
class Resolution:
    outcome: str  # "solved" | "fallback" | "escalated"
    plan: AirspacePlan
    trace: DecisionTrace
    stats: SearchStats
    tsr: TechnicalSafetyRecord  # record that triggered resolution (root)
    alert: Optional[str] = None

    @property
    def solved(self) -> bool:
        return self.outcome == "solved"


def _axis_footprint(inst: StrategyInstance) -> dict:
    return {(cs, axis.value): d for (cs, axis), d in inst.footprint().items()}


def _conflict_summary(c: ConflictRecord) -> dict:
    return {
        "pair": list(c.pair),
        "t_first_s": c.t_first_s,
        "cpa_time_s": c.cpa_time_s,
        "cpa_distance_nm": round(c.cpa_distance_nm, 3),
        "class": list(c.conflict_class.key()),
        "source": str(c.source),
    }


# ---------------------------------------------------------------------------
# The search
# ---------------------------------------------------------------------------


class _Search:
    def __init__(
        self,
        airspace: AirspaceMap,
        start: TwinStart,
        ensemble: EnsembleConfig,
        minima: SeparationMinima,
        thresholds: ClassThresholds,
        params: SearchParams,
        library: StrategyLibrary,
        floor_fl: int,
        ceiling_fl: int,
    ):
        self.airspace = airspace
        self.start = start
        self.ensemble = ensemble
        self.minima = minima
        self.thresholds = thresholds
        self.params = params
        self.library = library
        self.floor_fl = floor_fl
        self.ceiling_fl = ceiling_fl
        self.trace = DecisionTrace()
        self.stats = SearchStats()
        self.root_tsr: Optional[TechnicalSafetyRecord] = None
        self._last_rollouts: Optional[RolloutSet] = None

    def verify(self, plan: AirspacePlan) -> TechnicalSafetyRecord:
        rollouts = simulate_ensemble(
            plan, self.start, self.airspace, self.ensemble,
            lateral_minimum_nm=self.minima.lateral_nm,
        )
        self.stats.simulations += 1
        self.stats.rollouts += (
            1 + len(rollouts.perturbed) + len(rollouts.counterfactuals)
        )
        self._last_rollouts = rollouts
        return detect(rollouts, self.minima, self.thresholds)

    def resolve(self, plan: AirspacePlan, depth: int, parent_id: Optional[int]):
        tsr = self.verify(plan)
        rollouts = self._last_rollouts
        node = self.trace.new_node(depth, parent_id, plan.revision, len(tsr))
        if depth == 0:
            self.root_tsr = tsr
        if tsr.empty:
            node.outcome = "solved"
            return plan, node
        if depth >= self.params.max_depth:
            node.outcome = "depth-limit"
            return None, node

        conflict = earliest_conflict(tsr)
        node.conflict = _conflict_summary(conflict)
        attribution = attribute_cause(conflict, plan, rollouts)
        ctx = StrategyContext(
            conflict=conflict,
            plan=plan,
            airspace=self.airspace,
            states={st.callsign: st for st in self.start.states},
            minima=self.minima,
            floor_fl=self.floor_fl,
            ceiling_fl=self.ceiling_fl,
            attribution=attribution,
        )
        candidates = get_strategies(conflict.conflict_class, ctx, self.library)
        kept = filter_by_axis_constraints(candidates, plan.constraints,
                                          conflict.pair)
        node.filtered_out = [c.label() for c in candidates if c not in kept]
        kept = kept[: self.params.branch_cap]

        for inst in kept:
            if self.stats.expansions >= self.params.expansion_budget:
                node.attempts.append(
                    Attempt(inst.strategy_id, inst.label(), None, "budget",
                            _axis_footprint(inst))
                )
                node.outcome = "budget-exhausted"
                return None, node
            self.stats.expansions += 1
            child_plan = apply_strategy(plan, inst, conflict, attribution)
            solution, child_node = self.resolve(child_plan, depth + 1, node.node_id)
            node.attempts.append(
                Attempt(
                    inst.strategy_id, inst.label(), child_node.node_id,
                    "accepted" if solution is not None else "rejected",
                    _axis_footprint(inst),
                )
            )
            if solution is not None:
                node.outcome = "solved-below"
                return solution, node
        node.outcome = "exhausted"
        return None, node


def resolve_airspace(
    plan: AirspacePlan,
    start: TwinStart,
    airspace: AirspaceMap,
    ensemble: EnsembleConfig,
    minima: SeparationMinima = SeparationMinima(),
    thresholds: ClassThresholds = ClassThresholds(),
    params: SearchParams = SearchParams(),
    library: Optional[StrategyLibrary] = None,
    floor_fl: Optional[int] = None,
    ceiling_fl: Optional[int] = None,
) -> Resolution:
    """Algorithm entry point: returns a complete safe plan set or fallback.

    Greedy first-solution acceptance: the depth-first search returns the
    first plan whose full ensemble (nominal, perturbed, loss-of-comm cuts)
    has an empty Technical Safety Record. If the search space is exhausted
    (or the node budget trips), the conservative safe-flight-level fallback
    is applied to the root conflict pair and flagged as a planning failure.
    """
    search = _Search(
        airspace, start, ensemble, minima, thresholds, params,
        library or default_library(),
        floor_fl if floor_fl is not None else airspace.sector.floor_fl,
        ceiling_fl if ceiling_fl is not None else airspace.sector.ceiling_fl,
    )
    solution, _ = search.resolve(plan, 0, None)
    if solution is not None:
        return Resolution("solved", solution, search.trace, search.stats,
                          search.root_tsr)

    root_conflict = earliest_conflict(search.root_tsr)
    states = {st.callsign: st for st in start.states}
    try:
        fb_plan, alert = fallback(
            plan, root_conflict, states,
            search.floor_fl, search.ceiling_fl,
        )
        return Resolution("fallback", fb_plan, search.trace, search.stats,
                          search.root_tsr, alert=alert)
    except ResolverError as exc:
        return Resolution("escalated", plan, search.trace, search.stats,
                          search.root_tsr, alert=str(exc))


# ---------------------------------------------------------------------------
# Conservative fallback
# ---------------------------------------------------------------------------


def occupied_levels(plan: AirspacePlan, states: Mapping[str, "object"]) -> set[int]:
    """Every flight level commanded or held by any aircraft in the horizon."""
    occupied: set[int] = set()
    for cs, fp in plan.plans:
        occupied.add(fp.pfl)
        occupied.add(fp.exit_fl)
        for pa in fp.all_actions():
            if isinstance(pa.action, (ClimbTo, DescendTo)):
                occupied.add(pa.action.fl)
        st = states.get(cs)
        if st is not None:
            occupied.add(int(round(st.altitude_ft / (FL_STEP * 100.0))) * FL_STEP)
    return occupied


def fallback(
    plan: AirspacePlan,
    conflict: ConflictRecord,
    states: Mapping[str, "object"],
    floor_fl: int,
    ceiling_fl: int,
) -> tuple[AirspacePlan, str]:
    """Send both conflict aircraft to the nearest unoccupied flight levels.

    Replaces each aircraft's whole vertical chain with an immediate safe
    level-off, abandoning the coordinated exit level (the exit fix is kept).
    Raises ResolverError when no unoccupied level pair exists in the band.
    """
    occupied = occupied_levels(plan, states)
    grid = list(range(floor_fl, ceiling_fl + 1, FL_STEP))
    free = [fl for fl in grid if fl not in occupied]

    assignments: dict[str, int] = {}
    for cs in sorted(conflict.pair):
        st = states.get(cs)
        current = (
            int(round(st.altitude_ft / (FL_STEP * 100.0))) * FL_STEP
            if st is not None else plan.plan_for(cs).pfl
        )
        options = sorted(
            (fl for fl in free if fl not in assignments.values()),
            key=lambda fl: (abs(fl - current), fl),
        )
        options = [
            fl for fl in options
            if all(abs(fl - other) >= FL_STEP for other in assignments.values())
        ]
        if not options:
            raise ResolverError(
                f"no unoccupied flight level available for {cs} in "
                f"FL{floor_fl}-FL{ceiling_fl}; escalation required"
            )
        assignments[cs] = options[0]

    new_plan = plan
    for cs, target in assignments.items():
        fp = plan.plan_for(cs)
        st = states.get(cs)
        current_fl = (
            st.altitude_ft / 100.0 if st is not None else float(fp.pfl)
        )
        action = ClimbTo(target) if target > current_fl else DescendTo(target)
        pa = PlannedAction(
            id=f"{cs}-VERT-{FALLBACK_PROVENANCE}-r{plan.revision}",
            trigger=Immediate(),
            action=action,
            completion=ReachedLevel(target),
            provenance=FALLBACK_PROVENANCE,
        )
        new_fp = replace(fp.with_chain(Axis.VERTICAL, [pa]), exit_fl=target)
        new_plan = new_plan.with_plan(new_fp, bump=False)

    alert = (
        "resolution search exhausted; safe-flight-level fallback issued for "
        + " and ".join(f"{cs}->FL{fl}" for cs, fl in sorted(assignments.items()))
        + "; human intervention required"
    )
    return replace(new_plan, revision=plan.revision + 1), alert
