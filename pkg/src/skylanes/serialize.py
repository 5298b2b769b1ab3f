"""JSON encoding of plan and safety objects.

One schema serves the event log, the gateway payloads and the operator
console, so replay files can be rendered without a live server.
"""

from __future__ import annotations

from typing import Any

from .conflict import ConflictRecord, TechnicalSafetyRecord
from .plans import (
    AircraftPassedLaterally,
    AirspacePlan,
    And,
    AtFix,
    AxisConstraint,
    ClimbTo,
    Condition,
    DescendTo,
    FlightPlan,
    FlyLane,
    Immediate,
    LateralSeparationExceeds,
    Not,
    Or,
    PlannedAction,
    ReachedLevel,
    ResumeNav,
    SetSpeed,
    TimeReached,
)
from .twin import AircraftState


def encode_condition(c: Condition) -> dict[str, Any]:
    if isinstance(c, Immediate):
        return {"type": "Immediate"}
    if isinstance(c, TimeReached):
        return {"type": "TimeReached", "time_s": c.time_s}
    if isinstance(c, AtFix):
        return {"type": "AtFix", "fix_id": c.fix_id, "tolerance_nm": c.tolerance_nm}
    if isinstance(c, LateralSeparationExceeds):
        return {"type": "LateralSeparationExceeds", "other": c.other,
                "threshold_nm": c.threshold_nm}
    if isinstance(c, AircraftPassedLaterally):
        return {"type": "AircraftPassedLaterally", "other": c.other}
    if isinstance(c, ReachedLevel):
        return {"type": "ReachedLevel", "fl": c.fl}
    if isinstance(c, Not):
        return {"type": "Not", "inner": encode_condition(c.inner)}
    if isinstance(c, And):
        return {"type": "And", "terms": [encode_condition(t) for t in c.terms]}
    if isinstance(c, Or):
        return {"type": "Or", "terms": [encode_condition(t) for t in c.terms]}
    raise TypeError(f"unknown condition {c!r}")


def encode_action(a) -> dict[str, Any]:
    if isinstance(a, ClimbTo):
        body = {"type": "ClimbTo", "fl": a.fl}
    elif isinstance(a, DescendTo):
        body = {"type": "DescendTo", "fl": a.fl}
    elif isinstance(a, SetSpeed):
        body = {"type": "SetSpeed", "kt": a.kt}
    elif isinstance(a, FlyLane):
        body = {"type": "FlyLane", "route_id": a.route_id,
                "designation": a.designation.value}
    elif isinstance(a, ResumeNav):
        body = {"type": "ResumeNav", "fix_id": a.fix_id}
    else:
        raise TypeError(f"unknown action {a!r}")
    body["axis"] = a.axis.value
    body["phrase"] = a.phrase()
    return body


def decode_action(doc: dict[str, Any]):
    """Inverse of encode_action for console-supplied replacement actions."""
    from .geometry import LaneDesignation

    kind = doc.get("type")
    if kind == "ClimbTo":
        return ClimbTo(int(doc["fl"]))
    if kind == "DescendTo":
        return DescendTo(int(doc["fl"]))
    if kind == "SetSpeed":
        return SetSpeed(float(doc["kt"]))
    if kind == "FlyLane":
        return FlyLane(str(doc["route_id"]), LaneDesignation(doc["designation"]))
    if kind == "ResumeNav":
        return ResumeNav(str(doc["fix_id"]))
    raise TypeError(f"unknown action type {kind!r}")


def encode_planned_action(pa: PlannedAction) -> dict[str, Any]:
    return {
        "id": pa.id,
        "trigger": encode_condition(pa.trigger),
        "action": encode_action(pa.action),
        "completion": encode_condition(pa.completion),
        "provenance": pa.provenance,
    }


def encode_constraint(c: AxisConstraint) -> dict[str, Any]:
    return {
        "callsign": c.callsign,
        "axis": c.axis.value,
        "direction": c.direction,
        "release": encode_condition(c.release),
        "source_strategy": c.source_strategy,
    }


def encode_flight_plan(fp: FlightPlan) -> dict[str, Any]:
    return {
        "callsign": fp.callsign,
        "route_id": fp.route_id,
        "exit_fix": fp.exit_fix,
        "exit_fl": fp.exit_fl,
        "pfl": fp.pfl,
        "chains": {
            axis.value: [encode_planned_action(pa) for pa in chain]
            for axis, chain in fp.chains
        },
    }


def encode_airspace_plan(plan: AirspacePlan) -> dict[str, Any]:
    return {
        "revision": plan.revision,
        "plans": {cs: encode_flight_plan(fp) for cs, fp in plan.plans},
        "constraints": [encode_constraint(c) for c in plan.constraints],
    }


def encode_conflict(rec: ConflictRecord) -> dict[str, Any]:
    return {
        "pair": list(rec.pair),
        "t_first_s": rec.t_first_s,
        "t_last_s": rec.t_last_s,
        "cpa_time_s": rec.cpa_time_s,
        "cpa_distance_nm": round(rec.cpa_distance_nm, 4),
        "cpa_vertical_ft": round(rec.cpa_vertical_ft, 1),
        "class": list(rec.conflict_class.key()),
        "source": str(rec.source),
        "causal_ids": [list(c) for c in rec.causal_ids],
    }


def encode_tsr(tsr: TechnicalSafetyRecord) -> dict[str, Any]:
    return {
        "plan_revision": tsr.plan_revision,
        "count": len(tsr),
        "records": [encode_conflict(r) for r in tsr.records],
    }


def encode_airspace_geometry(airspace) -> dict[str, Any]:
    """Display geometry for the console: lanes, fixes, boundary, minima-free."""
    routes: dict[str, dict] = {}
    for (route_id, desig), lane in sorted(
        airspace.lanes.items(), key=lambda kv: (kv[0][0], kv[0][1].value)
    ):
        routes.setdefault(route_id, {})[desig.value] = [
            [round(x, 4), round(y, 4)] for x, y in lane.polyline
        ]
    return {
        "lane_offset_nm": airspace.lane_offset_nm,
        "routes": routes,
        "fixes": {fid: [f.x, f.y] for fid, f in sorted(airspace.fixes.items())},
        "boundary": [[x, y] for x, y in airspace.sector.boundary],
        "floor_fl": airspace.sector.floor_fl,
        "ceiling_fl": airspace.sector.ceiling_fl,
    }


def encode_state(st: AircraftState) -> dict[str, Any]:
    return {
        "callsign": st.callsign,
        "route_id": st.route_id,
        "lane": st.lane.value,
        "x": round(st.x, 4),
        "y": round(st.y, 4),
        "s_nm": round(st.s_nm, 4),
        "altitude_ft": round(st.altitude_ft, 1),
        "ground_speed_kt": round(st.ground_speed_kt, 1),
        "vertical_rate_fpm": round(st.vertical_rate_fpm, 1),
        "cross_track_nm": round(st.cross_track_nm, 4),
    }
