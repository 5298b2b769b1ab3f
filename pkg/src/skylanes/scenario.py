"""Scenario files: the single JSON document that defines an episode.

Schema (version 1):

    {
      "schema_version": 1,
      "name": "head-on",
      "seed": 42,
      "sector": {"boundary": [[x, y], ...], "floor_fl": 200, "ceiling_fl": 400},
      "fixes": [{"id": "WST", "x": 0.0, "y": 0.0}, ...],
      "routes": [{"id": "EB", "fixes": ["WST", "MID", "EST"]}, ...],
      "lane_offset_nm": 3.5,
      "aircraft": [
        {"callsign": "AC1", "route": "EB", "entry_time_s": 0.0,
         "entry_fl": 330, "pfl": 330, "exit_fix": "EST", "exit_fl": 330,
         "ground_speed_kt": 480.0, "climb_rate_fpm": 2000.0,
         "entry_s_nm": 0.0}, ...
      ],
      "minima": {"lateral_nm": 5.0, "vertical_ft": 1000.0},
      "perturbation": {"count": 20, "speed_band": 0.05,
                       "max_pilot_delay_s": 30.0, "cut_interval_s": 300.0,
                       "counterfactual_duration_s": 900.0},
      "search": {"max_depth": 3, "branch_cap": 8, "expansion_budget": 500},
      "horizon_s": 3600.0, "dt_s": 5.0, "cadence_s": 10.0,
      "entry_lookahead_s": 900.0, "response_margin_s": 0.0
    }

Every numeric block is optional and falls back to the defaults above;
referential integrity (fixes, routes, levels, feasibility) is checked at
load time with errors naming the offending element.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional

from .conflict import ClassThresholds, SeparationMinima
from .geometry import AirspaceMap, ExitCondition, Fix, GeometryError, Route, Sector
from .plans import EntryState, PerformanceParams
from .resolver import SearchParams
from .twin import EnsembleConfig

SCHEMA_VERSION = 1


class ScenarioError(ValueError):
    """Parse, schema or reference error in a scenario file."""


@dataclass(frozen=True)
class AircraftSpec:
    callsign: str
    route_id: str
    entry_time_s: float
    entry_fl: int
    pfl: int
    exit_fix: str
    exit_fl: int
    ground_speed_kt: float
    climb_rate_fpm: float = 2000.0
    entry_s_nm: float = 0.0

    def entry_state_args(self) -> dict:
        return dict(
            route_id=self.route_id,
            entry_fl=self.entry_fl,
            ground_speed_kt=self.ground_speed_kt,
            s_nm=self.entry_s_nm,
            climb_rate_fpm=self.climb_rate_fpm,
        )

    def exit_condition(self) -> ExitCondition:
        return ExitCondition(self.exit_fix, self.exit_fl)


@dataclass(frozen=True)
class Scenario:
    name: str
    seed: int
    airspace: AirspaceMap
    aircraft: tuple[AircraftSpec, ...]
    minima: SeparationMinima
    thresholds: ClassThresholds
    ensemble: EnsembleConfig
    search: SearchParams
    horizon_s: float
    dt_s: float
    cadence_s: float
    entry_lookahead_s: float
    response_margin_s: float
    raw: dict[str, Any]  # the source document, embedded in logs for replay

    def perf_for(self, spec: AircraftSpec) -> PerformanceParams:
        return PerformanceParams(
            climb_rate_fpm=spec.climb_rate_fpm,
            descent_rate_fpm=spec.climb_rate_fpm,
            response_margin_s=self.response_margin_s,
        )

    def spec_for(self, callsign: str) -> AircraftSpec:
        for a in self.aircraft:
            if a.callsign == callsign:
                return a
        raise ScenarioError(f"unknown callsign {callsign!r}")


def _get(doc: dict, key: str, expected: type, where: str, default=None):
    value = doc.get(key, default)
    if value is None:
        raise ScenarioError(f"{where}: missing required field {key!r}")
    if expected is float and isinstance(value, int):
        value = float(value)
    if not isinstance(value, expected):
        raise ScenarioError(
            f"{where}: field {key!r} should be {expected.__name__}, "
            f"got {type(value).__name__}"
        )
    return value


def parse_scenario(doc: dict[str, Any], where: str = "scenario") -> Scenario:
    version = doc.get("schema_version", SCHEMA_VERSION)
    if version != SCHEMA_VERSION:
        raise ScenarioError(f"{where}: unsupported schema_version {version}")

    sector_doc = _get(doc, "sector", dict, where)
    boundary = tuple(
        (float(p[0]), float(p[1]))
        for p in _get(sector_doc, "boundary", list, f"{where}.sector")
    )
    if len(boundary) < 3:
        raise ScenarioError(f"{where}.sector: boundary needs >= 3 vertices")
    sector = Sector(
        boundary=boundary,
        floor_fl=int(_get(sector_doc, "floor_fl", int, f"{where}.sector", 200)),
        ceiling_fl=int(_get(sector_doc, "ceiling_fl", int, f"{where}.sector", 400)),
    )

    fixes: dict[str, Fix] = {}
    for fd in _get(doc, "fixes", list, where):
        fid = _get(fd, "id", str, f"{where}.fixes")
        if fid in fixes:
            raise ScenarioError(f"{where}.fixes: duplicate fix id {fid!r}")
        fixes[fid] = Fix(fid, float(fd["x"]), float(fd["y"]))

    routes = []
    for rd in _get(doc, "routes", list, where):
        rid = _get(rd, "id", str, f"{where}.routes")
        route_fixes = []
        for fid in _get(rd, "fixes", list, f"{where}.routes[{rid}]"):
            if fid not in fixes:
                raise ScenarioError(
                    f"{where}.routes[{rid}]: unknown fix reference {fid!r}"
                )
            route_fixes.append(fixes[fid])
        routes.append(Route(rid, tuple(route_fixes)))

    lane_offset = float(doc.get("lane_offset_nm", 3.5))
    try:
        airspace = AirspaceMap(sector, routes, lane_offset)
    except GeometryError as exc:
        raise ScenarioError(f"{where}: {exc}") from exc

    aircraft = []
    seen = set()
    for ad in doc.get("aircraft", []):
        w = f"{where}.aircraft"
        cs = _get(ad, "callsign", str, w)
        if cs in seen:
            raise ScenarioError(f"{w}: duplicate callsign {cs!r}")
        seen.add(cs)
        w = f"{where}.aircraft[{cs}]"
        route_id = _get(ad, "route", str, w)
        if route_id not in airspace.routes:
            raise ScenarioError(f"{w}: unknown route reference {route_id!r}")
        exit_fix = _get(ad, "exit_fix", str, w)
        if (route_id, exit_fix) not in airspace.fix_s:
            raise ScenarioError(
                f"{w}: exit fix {exit_fix!r} is not on route {route_id!r}"
            )
        spec = AircraftSpec(
            callsign=cs,
            route_id=route_id,
            entry_time_s=float(ad.get("entry_time_s", 0.0)),
            entry_fl=int(_get(ad, "entry_fl", int, w)),
            pfl=int(_get(ad, "pfl", int, w)),
            exit_fix=exit_fix,
            exit_fl=int(_get(ad, "exit_fl", int, w)),
            ground_speed_kt=float(_get(ad, "ground_speed_kt", float, w, 480.0)),
            climb_rate_fpm=float(ad.get("climb_rate_fpm", 2000.0)),
            entry_s_nm=float(ad.get("entry_s_nm", 0.0)),
        )
        if spec.entry_time_s < 0:
            raise ScenarioError(f"{w}: entry_time_s must be >= 0")
        for fl_name, fl in (("entry_fl", spec.entry_fl), ("pfl", spec.pfl),
                            ("exit_fl", spec.exit_fl)):
            if not (sector.floor_fl <= fl <= sector.ceiling_fl):
                raise ScenarioError(
                    f"{w}: {fl_name} FL{fl} outside sector band "
                    f"FL{sector.floor_fl}-FL{sector.ceiling_fl}"
                )
        aircraft.append(spec)

    minima_doc = doc.get("minima", {})
    minima = SeparationMinima(
        lateral_nm=float(minima_doc.get("lateral_nm", 5.0)),
        vertical_ft=float(minima_doc.get("vertical_ft", 1000.0)),
    )
    th_doc = doc.get("thresholds", {})
    thresholds = ClassThresholds(
        parallel_max_deg=float(th_doc.get("parallel_max_deg", 45.0)),
        headon_min_deg=float(th_doc.get("headon_min_deg", 135.0)),
        similar_speed_kt=float(th_doc.get("similar_speed_kt", 20.0)),
        level_rate_fpm=float(th_doc.get("level_rate_fpm", 100.0)),
    )

    horizon_s = float(doc.get("horizon_s", 3600.0))
    dt_s = float(doc.get("dt_s", 5.0))
    cadence_s = float(doc.get("cadence_s", 10.0))
    if cadence_s % dt_s > 1e-9:
        raise ScenarioError(f"{where}: cadence_s must be a multiple of dt_s")

    pert = doc.get("perturbation", {})
    seed = int(doc.get("seed", 0))
    ensemble = EnsembleConfig(
        n_perturbed=int(pert.get("count", 20)),
        seed=seed,
        speed_band=float(pert.get("speed_band", 0.05)),
        max_pilot_delay_s=float(pert.get("max_pilot_delay_s", 30.0)),
        cut_interval_s=float(pert.get("cut_interval_s", 300.0)),
        counterfactual_duration_s=float(
            pert.get("counterfactual_duration_s", 900.0)
        ),
        horizon_s=horizon_s,
        dt_s=dt_s,
        entry_lookahead_s=float(doc.get("entry_lookahead_s", 900.0)),
    )

    search_doc = doc.get("search", {})
    search = SearchParams(
        max_depth=int(search_doc.get("max_depth", 3)),
        branch_cap=int(search_doc.get("branch_cap", 8)),
        expansion_budget=int(search_doc.get("expansion_budget", 500)),
    )

    return Scenario(
        name=str(doc.get("name", "unnamed")),
        seed=seed,
        airspace=airspace,
        aircraft=tuple(sorted(aircraft, key=lambda a: (a.entry_time_s, a.callsign))),
        minima=minima,
        thresholds=thresholds,
        ensemble=ensemble,
        search=search,
        horizon_s=horizon_s,
        dt_s=dt_s,
        cadence_s=cadence_s,
        entry_lookahead_s=float(doc.get("entry_lookahead_s", 900.0)),
        response_margin_s=float(doc.get("response_margin_s", 0.0)),
        raw=doc,
    )


def load_scenario(path: str | Path) -> Scenario:
    """Load and validate a scenario JSON file."""
    p = Path(path)
    if not p.exists():
        raise ScenarioError(f"scenario file not found: {p}")
    try:
        doc = json.loads(p.read_text())
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"{p}: invalid JSON at line {exc.lineno}: {exc.msg}")
    if not isinstance(doc, dict):
        raise ScenarioError(f"{p}: top level must be a JSON object")
    return parse_scenario(doc, where=str(p))
