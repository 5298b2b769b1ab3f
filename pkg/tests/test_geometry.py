import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from skylanes.geometry import (
    AirspaceMap,
    Fix,
    GeometryError,
    LaneDesignation,
    Route,
    Sector,
    along_track,
    build_lanes,
    min_lane_spacing,
    point_at,
    turn_interior_angles_deg,
)

from .oracles import dense_min_spacing, intersect_lines


def route_from_coords(rid, coords):
    return Route(rid, tuple(Fix(f"{rid}-{k}", x, y) for k, (x, y) in enumerate(coords)))


STRAIGHT = route_from_coords("STR", [(0, 0), (20, 0)])
ELBOW = route_from_coords("ELB", [(0, 0), (10, 0), (10, 10)])


class TestBuildLanes:
    def test_straight_left_offset(self):
        lanes = build_lanes(STRAIGHT, 3.5)
        assert lanes[LaneDesignation.LEFT].polyline == ((0.0, 3.5), (20.0, 3.5))
        assert lanes[LaneDesignation.RIGHT].polyline == ((0.0, -3.5), (20.0, -3.5))

    def test_turn_transition_node_matches_line_intersection(self):
        lanes = build_lanes(ELBOW, 3.5)
        # left offset lines of the east leg (y=3.5) and the north leg (x=6.5)
        expected = intersect_lines((0, 3.5), (1, 0), (6.5, 0), (0, 1))
        node = lanes[LaneDesignation.LEFT].polyline[1]
        assert node == pytest.approx(expected, abs=1e-12)
        assert node == pytest.approx((6.5, 3.5))

    def test_zero_offset_returns_centreline(self):
        lanes = build_lanes(ELBOW, 0.0)
        for desig in LaneDesignation:
            assert lanes[desig].polyline == ((0.0, 0.0), (10.0, 0.0), (10.0, 10.0))

    def test_reflex_turn_rejected_and_names_the_fix(self):
        hairpin = route_from_coords("HP", [(0, 0), (10, 0), (0, 2)])
        assert turn_interior_angles_deg(hairpin.points())[0] < 30
        with pytest.raises(GeometryError, match="HP-1"):
            build_lanes(hairpin, 3.5)

    def test_route_validation(self):
        with pytest.raises(GeometryError):
            Route("ONE", (Fix("A", 0, 0),))
        with pytest.raises(GeometryError):
            route_from_coords("DUP", [(0, 0), (0, 0), (5, 5)])


class TestAlongTrack:
    def test_straight_projection(self):
        lane = build_lanes(route_from_coords("L", [(0, 0), (10, 0)]), 0)[
            LaneDesignation.CENTRE
        ]
        at = along_track(lane, (4.0, 1.0))
        assert at.s_nm == pytest.approx(4.0)
        assert at.cross_track_nm == pytest.approx(1.0)
        assert not at.clamped

    def test_point_on_polyline_has_zero_cross_track(self):
        lane = build_lanes(ELBOW, 3.5)[LaneDesignation.LEFT]
        for s in (0.0, 2.0, lane.path.length / 2, lane.path.length):
            p = point_at(lane, s)
            at = along_track(lane, p)
            assert at.cross_track_nm == pytest.approx(0.0, abs=1e-9)
            assert at.s_nm == pytest.approx(s, abs=1e-9)

    def test_clamps_beyond_endpoint(self):
        lane = build_lanes(route_from_coords("L", [(0, 0), (10, 0)]), 0)[
            LaneDesignation.CENTRE
        ]
        at = along_track(lane, (12.0, 0.0))
        assert at.s_nm == pytest.approx(10.0)
        assert at.clamped


class TestPointAt:
    def test_simple(self):
        lane = build_lanes(route_from_coords("L", [(0, 0), (10, 0)]), 0)[
            LaneDesignation.CENTRE
        ]
        assert point_at(lane, 3.0) == pytest.approx((3.0, 0.0))
        assert point_at(lane, 0.0) == pytest.approx((0.0, 0.0))

    def test_arc_length_walk_across_segments(self):
        lane = build_lanes(route_from_coords("L", [(0, 0), (10, 0), (10, 10)]), 0)[
            LaneDesignation.CENTRE
        ]
        assert point_at(lane, 15.0) == pytest.approx((10.0, 5.0))

    def test_out_of_range(self):
        lane = build_lanes(STRAIGHT, 0)[LaneDesignation.CENTRE]
        with pytest.raises(GeometryError):
            point_at(lane, -1.0)
        with pytest.raises(GeometryError):
            point_at(lane, 21.0)

    @given(st.floats(min_value=0.0, max_value=1.0))
    @settings(max_examples=50, deadline=None)
    def test_along_track_inverts_point_at(self, frac):
        lane = build_lanes(ELBOW, 3.5)[LaneDesignation.RIGHT]
        s = frac * lane.path.length
        at = along_track(lane, point_at(lane, s))
        assert abs(at.s_nm - s) < 1e-9
        assert abs(at.cross_track_nm) < 1e-9


class TestMinLaneSpacing:
    def test_straight_pair_is_twice_offset(self):
        lanes = build_lanes(STRAIGHT, 3.5)
        spacing = min_lane_spacing(
            lanes[LaneDesignation.LEFT], lanes[LaneDesignation.RIGHT], 0.5
        )
        assert spacing == pytest.approx(7.0)

    def test_lane_vs_itself_is_zero(self):
        lane = build_lanes(STRAIGHT, 3.5)[LaneDesignation.LEFT]
        assert min_lane_spacing(lane, lane, 0.5) == pytest.approx(0.0)

    def test_right_angle_turn_preserves_spacing(self):
        lanes = build_lanes(ELBOW, 3.5)
        left, right = lanes[LaneDesignation.LEFT], lanes[LaneDesignation.RIGHT]
        spacing = min_lane_spacing(left, right, 0.1)
        assert spacing >= 7.0 - 1e-6
        # dense-sampling oracle agrees
        oracle = dense_min_spacing(
            np.array(left.polyline), np.array(right.polyline), step=0.001
        )
        assert spacing == pytest.approx(oracle, abs=1e-3)

    @pytest.mark.parametrize("interior_deg", [35.0, 60.0, 95.0, 150.0])
    def test_sharp_single_turns_keep_spacing(self, interior_deg):
        turn = math.radians(180.0 - interior_deg)
        leg = 120.0
        end = (leg + leg * math.cos(turn), leg * math.sin(turn))
        route = route_from_coords("SHARP", [(0, 0), (leg, 0), end])
        lanes = build_lanes(route, 3.5)
        spacing = min_lane_spacing(
            lanes[LaneDesignation.LEFT], lanes[LaneDesignation.RIGHT], 0.05
        )
        assert spacing >= 7.0 - 1e-6


class TestAirspaceMap:
    def test_fix_lookup_and_bounds(self):
        sector = Sector(((-10, -20), (40, -20), (40, 20), (-10, 20)), 200, 400)
        amap = AirspaceMap(sector, [STRAIGHT])
        assert amap.fix_along_route("STR", "STR-1") == pytest.approx(20.0)
        assert amap.centre("STR").designation is LaneDesignation.CENTRE
        with pytest.raises(GeometryError):
            amap.fix_along_route("STR", "NOPE")

    def test_fix_outside_boundary_rejected(self):
        sector = Sector(((0, 0), (5, 0), (5, 5), (0, 5)), 200, 400)
        with pytest.raises(GeometryError, match="outside"):
            AirspaceMap(sector, [STRAIGHT])
