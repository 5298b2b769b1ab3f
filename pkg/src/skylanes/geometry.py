"""Lane network geometry for systemised-airspace sectors.

Routes are fix-to-fix polylines in a flat local Cartesian frame measured in
nautical miles (desk-scale sectors, no geodesy). Every route carries three
parallel lanes (Left / Centre / Right). The offset lanes are built by miter
joins: at each turn the two adjacent offset lines are intersected, which
keeps the left-right spacing at twice the offset through the turn.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Mapping, Sequence

import numpy as np

DEFAULT_LANE_OFFSET_NM = 3.5
MITER_LIMIT_INTERIOR_DEG = 30.0


class GeometryError(ValueError):
    """Degenerate route geometry or a turn beyond the miter limit."""


class LaneDesignation(str, Enum):
    LEFT = "Left"
    CENTRE = "Centre"
    RIGHT = "Right"


#: Signed lateral offset of each designation, in units of the route offset.
DESIGNATION_SIGN = {
    LaneDesignation.LEFT: +1.0,
    LaneDesignation.CENTRE: 0.0,
    LaneDesignation.RIGHT: -1.0,
}


@dataclass(frozen=True)
class Fix:
    id: str
    x: float
    y: float

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise GeometryError(f"fix {self.id!r} has non-finite coordinates")


@dataclass(frozen=True)
class Route:
    id: str
    fixes: tuple[Fix, ...]

    def __post_init__(self):
        if len(self.fixes) < 2:
            raise GeometryError(f"route {self.id!r} needs at least 2 fixes")
        for a, b in zip(self.fixes, self.fixes[1:]):
            if math.hypot(b.x - a.x, b.y - a.y) < 1e-9:
                raise GeometryError(
                    f"route {self.id!r}: zero-length segment at fix {a.id!r}"
                )

    def points(self) -> np.ndarray:
        return np.array([[f.x, f.y] for f in self.fixes], dtype=float)


@dataclass(frozen=True, eq=False)
class Lane:
    route_id: str
    designation: LaneDesignation
    polyline: tuple[tuple[float, float], ...]
    offset_nm: float

    @property
    def path(self) -> "LanePath":
        p = getattr(self, "_path", None)
        if p is None:
            p = LanePath(np.array(self.polyline, dtype=float))
            object.__setattr__(self, "_path", p)
        return p


@dataclass(frozen=True)
class ExitCondition:
    fix_id: str
    flight_level: int  # coordinated FL (hundreds of feet)


@dataclass(frozen=True)
class Sector:
    boundary: tuple[tuple[float, float], ...]
    floor_fl: int
    ceiling_fl: int

    def contains(self, x: float, y: float, pad_nm: float = 1e-6) -> bool:
        return _point_in_polygon(x, y, self.boundary, pad_nm)


@dataclass(frozen=True)
class AlongTrack:
    s_nm: float
    cross_track_nm: float
    clamped: bool = False


class LanePath:
    """Precomputed polyline geometry with cheap along-track queries.

    Keeps plain-float copies of the arrays so per-step queries inside the
    simulator avoid numpy scalar overhead.
    """

    __slots__ = (
        "vertices", "seg_vec", "seg_len", "seg_dir", "cum_len", "length",
        "_px", "_py", "_dx", "_dy", "_ln", "_cum",
    )

    def __init__(self, vertices: np.ndarray):
        if vertices.ndim != 2 or vertices.shape[0] < 2:
            raise GeometryError("lane polyline needs at least 2 vertices")
        self.vertices = vertices
        self.seg_vec = vertices[1:] - vertices[:-1]
        self.seg_len = np.hypot(self.seg_vec[:, 0], self.seg_vec[:, 1])
        if np.any(self.seg_len < 1e-12):
            raise GeometryError("lane polyline has a zero-length segment")
        self.seg_dir = self.seg_vec / self.seg_len[:, None]
        self.cum_len = np.concatenate(([0.0], np.cumsum(self.seg_len)))
        self.length = float(self.cum_len[-1])
        self._px = self.vertices[:, 0].tolist()
        self._py = self.vertices[:, 1].tolist()
        self._dx = self.seg_dir[:, 0].tolist()
        self._dy = self.seg_dir[:, 1].tolist()
        self._ln = self.seg_len.tolist()
        self._cum = self.cum_len.tolist()

    def n_segments(self) -> int:
        return len(self._ln)

    def segment_at(self, s: float, hint: int = 0) -> int:
        """Index of the segment containing arc length s (clamped)."""
        n = len(self._ln)
        i = hint if 0 <= hint < n else min(max(hint, 0), n - 1)
        cum = self._cum
        while i > 0 and s < cum[i]:
            i -= 1
        while i < n - 1 and s > cum[i + 1]:
            i += 1
        return i

    def point_at(self, s: float, hint: int = 0) -> tuple[float, float]:
        if s < -1e-9 or s > self.length + 1e-9:
            raise GeometryError(
                f"arc length {s} outside [0, {self.length}]"
            )
        i = self.segment_at(s, hint)
        t = s - self._cum[i]
        return (self._px[i] + self._dx[i] * t, self._py[i] + self._dy[i] * t)

    def direction_at(self, s: float, hint: int = 0) -> tuple[float, float]:
        i = self.segment_at(s, hint)
        return (self._dx[i], self._dy[i])

    def left_normal(self, seg_idx: int) -> tuple[float, float]:
        return (-self._dy[seg_idx], self._dx[seg_idx])

    def project_near(self, x: float, y: float, hint: int = 0) -> tuple[float, int]:
        """Arc length of the projection of (x, y), walking from a segment hint.

        Intended for points near the polyline that move forward along it
        (aircraft positions); falls back to clamping at corners.
        """
        n = len(self._ln)
        i = hint if 0 <= hint < n else min(max(hint, 0), n - 1)
        moved = 0
        for _ in range(n + 1):
            t = (x - self._px[i]) * self._dx[i] + (y - self._py[i]) * self._dy[i]
            if t < 0.0 and i > 0 and moved <= 0:
                i -= 1
                moved = -1
                continue
            if t > self._ln[i] and i < n - 1 and moved >= 0:
                i += 1
                moved = 1
                continue
            if t < 0.0:
                t = 0.0
            elif t > self._ln[i]:
                t = self._ln[i]
            return (self._cum[i] + t, i)
        t = (x - self._px[i]) * self._dx[i] + (y - self._py[i]) * self._dy[i]
        return (self._cum[i] + min(max(t, 0.0), self._ln[i]), i)

    def along_track(self, x: float, y: float) -> AlongTrack:
        """Project a point onto the polyline.

        Returns arc length, signed cross-track (positive left of travel) and
        a flag when the projection clamped beyond an endpoint.
        """
        vx = x - self.vertices[:-1, 0]
        vy = y - self.vertices[:-1, 1]
        t = vx * self.seg_dir[:, 0] + vy * self.seg_dir[:, 1]
        t_clamped = np.clip(t, 0.0, self.seg_len)
        px = self.vertices[:-1, 0] + self.seg_dir[:, 0] * t_clamped
        py = self.vertices[:-1, 1] + self.seg_dir[:, 1] * t_clamped
        d2 = (x - px) ** 2 + (y - py) ** 2
        i = int(np.argmin(d2))
        s = float(self.cum_len[i] + t_clamped[i])
        # Signed distance to the supporting line of the nearest segment.
        nx, ny = -self.seg_dir[i, 1], self.seg_dir[i, 0]
        cross = float((x - self.vertices[i, 0]) * nx + (y - self.vertices[i, 1]) * ny)
        clamped = bool(t[i] < 0.0 or t[i] > self.seg_len[i])
        return AlongTrack(s, cross, clamped)

    def min_distance_to_point(self, x: float, y: float) -> float:
        vx = x - self.vertices[:-1, 0]
        vy = y - self.vertices[:-1, 1]
        t = np.clip(vx * self.seg_dir[:, 0] + vy * self.seg_dir[:, 1], 0.0, self.seg_len)
        px = self.vertices[:-1, 0] + self.seg_dir[:, 0] * t
        py = self.vertices[:-1, 1] + self.seg_dir[:, 1] * t
        return float(np.sqrt(np.min((x - px) ** 2 + (y - py) ** 2)))

    def sample(self, step_nm: float) -> np.ndarray:
        """Points at every multiple of step_nm plus both endpoints."""
        if step_nm <= 0:
            raise GeometryError("sample step must be positive")
        s_values = np.arange(0.0, self.length, step_nm)
        s_values = np.append(s_values, self.length)
        idx = np.searchsorted(self.cum_len, s_values, side="right") - 1
        idx = np.clip(idx, 0, len(self.seg_len) - 1)
        t = s_values - self.cum_len[idx]
        return self.vertices[idx] + self.seg_dir[idx] * t[:, None]


def turn_interior_angles_deg(points: np.ndarray) -> np.ndarray:
    """Interior angle at each internal vertex (180 deg = straight through)."""
    d = points[1:] - points[:-1]
    d = d / np.hypot(d[:, 0], d[:, 1])[:, None]
    dots = np.clip(np.sum(d[:-1] * d[1:], axis=1), -1.0, 1.0)
    turn = np.degrees(np.arccos(dots))
    return 180.0 - turn


def _offset_polyline(points: np.ndarray, offset: float, route: Route) -> np.ndarray:
    """Miter-joined offset (positive = left of travel direction)."""
    if abs(offset) < 1e-12:
        return points.copy()
    d = points[1:] - points[:-1]
    d = d / np.hypot(d[:, 0], d[:, 1])[:, None]
    normals = np.stack([-d[:, 1], d[:, 0]], axis=1)

    out = np.empty_like(points)
    out[0] = points[0] + offset * normals[0]
    out[-1] = points[-1] + offset * normals[-1]
    interior = turn_interior_angles_deg(points)
    for k in range(1, len(points) - 1):
        if interior[k - 1] < MITER_LIMIT_INTERIOR_DEG:
            raise GeometryError(
                f"route {route.id!r}: turn at fix {route.fixes[k].id!r} has "
                f"interior angle {interior[k - 1]:.1f} deg, below the "
                f"{MITER_LIMIT_INTERIOR_DEG:.0f} deg miter limit"
            )
        n1, n2 = normals[k - 1], normals[k]
        denom = 1.0 + float(n1 @ n2)
        # denom = 1 + cos(turn); the miter limit keeps it away from zero.
        out[k] = points[k] + offset * (n1 + n2) / denom
    return out


def build_lanes(
    route: Route, offset_nm: float = DEFAULT_LANE_OFFSET_NM
) -> dict[LaneDesignation, Lane]:
    """Build the Left/Centre/Right lanes of a route.

    The centre lane is the fix polyline itself; left and right are its
    miter-joined offsets at +/- offset_nm. Raises GeometryError when a turn
    is sharper than the miter limit.
    """
    if offset_nm < 0:
        raise GeometryError("lane offset must be >= 0")
    points = route.points()
    lanes = {}
    for desig in LaneDesignation:
        off = DESIGNATION_SIGN[desig] * offset_nm
        poly = _offset_polyline(points, off, route)
        lanes[desig] = Lane(
            route_id=route.id,
            designation=desig,
            polyline=tuple((float(x), float(y)) for x, y in poly),
            offset_nm=off,
        )
    return lanes


def along_track(lane: Lane, point: tuple[float, float]) -> AlongTrack:
    return lane.path.along_track(point[0], point[1])


def point_at(lane: Lane, s_nm: float) -> tuple[float, float]:
    return lane.path.point_at(s_nm)


def min_lane_spacing(a: Lane, b: Lane, sample_step_nm: float = 0.1) -> float:
    """Minimum sampled point-to-polyline distance between two lanes.

    Sampled symmetrically (points of each lane against the other polyline);
    used to certify lane-pair deconfliction.
    """
    best = math.inf
    for src, dst in ((a, b), (b, a)):
        pts = src.path.sample(sample_step_nm)
        for x, y in pts:
            d = dst.path.min_distance_to_point(float(x), float(y))
            if d < best:
                best = d
    return best


def _point_in_polygon(
    x: float, y: float, polygon: Sequence[tuple[float, float]], pad: float
) -> bool:
    """Ray-cast test, treating points within pad of an edge as inside."""
    inside = False
    n = len(polygon)
    for i in range(n):
        x1, y1 = polygon[i]
        x2, y2 = polygon[(i + 1) % n]
        # edge proximity
        ex, ey = x2 - x1, y2 - y1
        ll = ex * ex + ey * ey
        if ll > 0:
            t = max(0.0, min(1.0, ((x - x1) * ex + (y - y1) * ey) / ll))
            if math.hypot(x - (x1 + t * ex), y - (y1 + t * ey)) <= pad:
                return True
        if (y1 > y) != (y2 > y):
            xi = x1 + (y - y1) * (x2 - x1) / (y2 - y1)
            if x < xi:
                inside = not inside
    return inside


class AirspaceMap:
    """Routes, lanes and fix lookups for one sector definition."""

    def __init__(
        self,
        sector: Sector,
        routes: Iterable[Route],
        lane_offset_nm: float = DEFAULT_LANE_OFFSET_NM,
    ):
        self.sector = sector
        self.lane_offset_nm = lane_offset_nm
        self.routes: dict[str, Route] = {}
        self.lanes: dict[tuple[str, LaneDesignation], Lane] = {}
        self.fixes: dict[str, Fix] = {}
        #: arc position of each fix along its route centreline
        self.fix_s: dict[tuple[str, str], float] = {}
        for route in routes:
            if route.id in self.routes:
                raise GeometryError(f"duplicate route id {route.id!r}")
            self.routes[route.id] = route
            for desig, lane in build_lanes(route, lane_offset_nm).items():
                self.lanes[(route.id, desig)] = lane
            centre = self.lanes[(route.id, LaneDesignation.CENTRE)]
            for k, fix in enumerate(route.fixes):
                existing = self.fixes.get(fix.id)
                if existing is not None and (existing.x, existing.y) != (fix.x, fix.y):
                    raise GeometryError(f"fix {fix.id!r} redefined with new position")
                self.fixes[fix.id] = fix
                self.fix_s[(route.id, fix.id)] = float(centre.path.cum_len[k])
                if not sector.contains(fix.x, fix.y):
                    raise GeometryError(
                        f"fix {fix.id!r} lies outside the sector boundary"
                    )

    def lane(self, route_id: str, designation: LaneDesignation) -> Lane:
        try:
            return self.lanes[(route_id, designation)]
        except KeyError:
            raise GeometryError(
                f"no lane {designation.value!r} on route {route_id!r}"
            ) from None

    def centre(self, route_id: str) -> Lane:
        return self.lane(route_id, LaneDesignation.CENTRE)

    def fix_along_route(self, route_id: str, fix_id: str) -> float:
        try:
            return self.fix_s[(route_id, fix_id)]
        except KeyError:
            raise GeometryError(
                f"fix {fix_id!r} is not on route {route_id!r}"
            ) from None
