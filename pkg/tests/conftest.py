import pytest

from skylanes.geometry import AirspaceMap, ExitCondition, Fix, Route, Sector
from skylanes.plans import (
    AirspacePlan,
    EntryState,
    PerformanceParams,
    build_nominal_plan,
)
from skylanes.twin import TwinStart, make_entry_state


@pytest.fixture(scope="session")
def corridor() -> AirspaceMap:
    """A 160 NM straight corridor with reciprocal eastbound/westbound routes."""
    sector = Sector(((-20, -40), (180, -40), (180, 40), (-20, 40)), 200, 400)
    wst, mid, est = Fix("WST", 0, 0), Fix("MID", 80, 0), Fix("EST", 160, 0)
    routes = [Route("EB", (wst, mid, est)), Route("WB", (est, mid, wst))]
    return AirspaceMap(sector, routes)


@pytest.fixture()
def corridor_cross():
    """Perpendicular crossing timed to be safe nominally (gap 60 s, minimum
    distance 5.7 NM) but separable by under 5 NM once +/-5 percent speed
    noise shifts the arrival times."""
    sector = Sector(((-20, -100), (180, -100), (180, 100), (-20, 100)), 200, 400)
    eb = Route("EB", (Fix("W0", 0, 0), Fix("E0", 160, 0)))
    nb = Route("NB", (Fix("S0", 80, -88), Fix("N0", 80, 88)))
    airspace = AirspaceMap(sector, [eb, nb])
    p1 = nominal_plan(airspace, "AC1", "EB", 330, 330, 330)
    p2 = nominal_plan(airspace, "AC2", "NB", 330, 330, 330)
    plan = plan_of(p1, p2)
    start = start_of(airspace, plan,
                     speeds={"AC1": (330, 480.0), "AC2": (330, 480.0)})
    return airspace, plan, start


def nominal_plan(airspace, callsign, route_id, entry_fl, pfl, exit_fl, gs_kt=480.0,
                 perf=None):
    route = airspace.routes[route_id]
    exit_fix = route.fixes[-1].id
    entry = EntryState(callsign, route_id, entry_fl, gs_kt)
    return build_nominal_plan(
        entry, airspace, pfl, ExitCondition(exit_fix, exit_fl),
        perf or PerformanceParams(),
    )


def plan_of(*flight_plans) -> AirspacePlan:
    entries = tuple(sorted(((fp.callsign, fp) for fp in flight_plans)))
    return AirspacePlan(plans=entries)


@pytest.fixture(scope="session")
def corridor3() -> AirspaceMap:
    """The reciprocal corridor plus a parallel eastbound route 7 NM north."""
    sector = Sector(((-20, -40), (180, -40), (180, 40), (-20, 40)), 200, 400)
    wst, mid, est = Fix("WST", 0, 0), Fix("MID", 80, 0), Fix("EST", 160, 0)
    wpn, epn = Fix("WPN", 0, 7), Fix("EPN", 160, 7)
    routes = [
        Route("EB", (wst, mid, est)),
        Route("WB", (est, mid, wst)),
        Route("EBP", (wpn, epn)),
    ]
    return AirspaceMap(sector, routes)


def start_of(airspace, plan, speeds=None, entry_times=None, climb_rates=None,
             entry_s=None) -> TwinStart:
    speeds = speeds or {}
    entry_times = entry_times or {}
    climb_rates = climb_rates or {}
    entry_s = entry_s or {}
    states = []
    entrants = []
    for cs, fp in plan.plans:
        st = make_entry_state(
            cs, airspace, fp.route_id,
            entry_fl=speeds.get(cs, (fp.pfl, 480.0))[0],
            ground_speed_kt=speeds.get(cs, (fp.pfl, 480.0))[1],
            climb_rate_fpm=climb_rates.get(cs, 2000.0),
            s_nm=entry_s.get(cs, 0.0),
        )
        t = entry_times.get(cs, 0.0)
        if t > 0:
            entrants.append((t, st))
        else:
            states.append(st)
    return TwinStart(time_s=0.0, states=tuple(states), entrants=tuple(entrants))
