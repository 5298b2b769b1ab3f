"""Separation monitoring, closest point of approach and conflict taxonomy.

Conflicts are pairwise: a violation is the simultaneous loss of lateral and
vertical separation at a trajectory sample. Each contiguous violation
interval in any rollout (nominal, perturbed, or loss-of-comm counterfactual)
becomes one record in the Technical Safety Record, classified at the
predicted closest point of approach by relative vertical state, relative
heading and relative speed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from enum import Enum
from itertools import combinations
from typing import Iterable, Optional, Sequence

import numpy as np

from .twin import RolloutSet, Trajectory


class ConflictError(ValueError):
    pass


@dataclass(frozen=True)
class SeparationMinima:
    lateral_nm: float = 5.0
    vertical_ft: float = 1000.0

    def __post_init__(self):
        if self.lateral_nm <= 0 or self.vertical_ft <= 0:
            raise ConflictError("separation minima must be positive")


class VerticalClass(str, Enum):
    LL = "LL"  # both level
    LA = "LA"  # one level / one (or both) ascending
    LD = "LD"  # one level / one (or both) descending
    AD = "AD"  # opposing vertical rates


class LateralClass(str, Enum):
    HO = "HO"  # head-on
    CR = "CR"  # crossing
    P = "P"    # parallel / same track


class SpeedClass(str, Enum):
    SIMILAR = "Similar"
    AC1_FASTER = "AC1Faster"
    AC2_FASTER = "AC2Faster"


@dataclass(frozen=True)
class ConflictClass:
    vertical: VerticalClass
    lateral: LateralClass
    speed: SpeedClass

    def key(self) -> tuple[str, str, str]:
        return (self.vertical.value, self.lateral.value, self.speed.value)

    def __str__(self) -> str:
        return f"({self.vertical.value}, {self.lateral.value}, {self.speed.value})"


ALL_CONFLICT_CLASSES = tuple(
    ConflictClass(v, l, s)
    for v in VerticalClass
    for l in LateralClass
    for s in SpeedClass
)


@dataclass(frozen=True)
class ClassThresholds:
    parallel_max_deg: float = 45.0    # track angle difference <= this is P
    headon_min_deg: float = 135.0     # >= this is HO; in between is CR
    similar_speed_kt: float = 20.0
    level_rate_fpm: float = 100.0


@dataclass(frozen=True)
class RolloutSource:
    """Which rollout produced a conflict: nominal, perturbed(k) or cut(t)."""

    kind: str  # "nominal" | "perturbed" | "counterfactual"
    key: Optional[float] = None

    _RANK = {"nominal": 0, "perturbed": 1, "counterfactual": 2}

    def rank(self) -> tuple[int, float]:
        return (self._RANK[self.kind], float(self.key or 0))

    def __str__(self) -> str:
        if self.kind == "nominal":
            return "nominal"
        if self.kind == "perturbed":
            return f"perturbed({int(self.key)})"
        return f"counterfactual(cut={self.key:.0f}s)"


@dataclass(frozen=True)
class AircraftAtCpa:
    callsign: str
    x: float
    y: float
    altitude_ft: float
    vertical_rate_fpm: float
    ground_speed_kt: float
    vx_kt: float
    vy_kt: float


@dataclass(frozen=True)
class ConflictRecord:
    pair: tuple[str, str]            # lexicographically ordered
    t_first_s: float
    t_last_s: float
    cpa_time_s: float
    cpa_distance_nm: float
    cpa_vertical_ft: float
    conflict_class: ConflictClass
    source: RolloutSource
    at_cpa: tuple[AircraftAtCpa, AircraftAtCpa]
    causal_ids: tuple[tuple[str, str, str], ...] = ()  # (callsign, axis, action id)

    def sort_key(self):
        return (self.t_first_s, self.pair, self.source.rank())


@dataclass(frozen=True)
class TechnicalSafetyRecord:
    plan_revision: int
    records: tuple[ConflictRecord, ...]

    @property
    def empty(self) -> bool:
        return not self.records

    def __len__(self) -> int:
        return len(self.records)


# ---------------------------------------------------------------------------
# Elementary checks
# ---------------------------------------------------------------------------


def check_separation(a, b, minima: SeparationMinima) -> bool:
    """True iff the pair violates BOTH the lateral and vertical minima."""
    lateral = math.hypot(a.x - b.x, a.y - b.y)
    vertical = abs(a.altitude_ft - b.altitude_ft)
    return lateral < minima.lateral_nm and vertical < minima.vertical_ft


def _align(a: Trajectory, b: Trajectory):
    """Indices of the shared sample times of two trajectories."""
    ta = np.round(a.times * 1000).astype(np.int64)
    tb = np.round(b.times * 1000).astype(np.int64)
    common, ia, ib = np.intersect1d(ta, tb, return_indices=True)
    return common / 1000.0, ia, ib


def compute_cpa(
    a: Trajectory,
    b: Trajectory,
    minima: Optional[SeparationMinima] = None,
) -> tuple[float, float, float]:
    """(t*, lateral distance, vertical gap) at the closest point of approach.

    t* minimises lateral distance over the shared samples; if the pair loses
    separation anywhere, the search is restricted to the violation window.
    Ties resolve to the earliest time.
    """
    times, ia, ib = _align(a, b)
    if len(times) == 0:
        raise ConflictError(
            f"trajectories of {a.callsign} and {b.callsign} do not overlap in time"
        )
    dx = a.x[ia] - b.x[ib]
    dy = a.y[ia] - b.y[ib]
    lat = np.hypot(dx, dy)
    dz = np.abs(a.altitude_ft[ia] - b.altitude_ft[ib])
    domain = np.arange(len(times))
    if minima is not None:
        viol = (lat < minima.lateral_nm) & (dz < minima.vertical_ft)
        if viol.any():
            domain = np.flatnonzero(viol)
    k = domain[int(np.argmin(lat[domain]))]
    return float(times[k]), float(lat[k]), float(dz[k])


def _velocity_at(traj: Trajectory, idx: int) -> tuple[float, float]:
    """Ground-track velocity vector in kt at a sample, by finite differences."""
    n = len(traj.times)
    j = idx if idx + 1 < n else idx - 1
    dt_h = (traj.times[j + 1] - traj.times[j]) / 3600.0
    if dt_h <= 0:
        return (0.0, 0.0)
    vx = (traj.x[j + 1] - traj.x[j]) / dt_h
    vy = (traj.y[j + 1] - traj.y[j]) / dt_h
    return (float(vx), float(vy))


def snapshot_at(traj: Trajectory, idx: int) -> AircraftAtCpa:
    vx, vy = _velocity_at(traj, idx)
    return AircraftAtCpa(
        callsign=traj.callsign,
        x=float(traj.x[idx]),
        y=float(traj.y[idx]),
        altitude_ft=float(traj.altitude_ft[idx]),
        vertical_rate_fpm=float(traj.vertical_rate_fpm[idx]),
        ground_speed_kt=float(traj.ground_speed_kt[idx]),
        vx_kt=vx,
        vy_kt=vy,
    )


def classify(
    ac1: AircraftAtCpa,
    ac2: AircraftAtCpa,
    thresholds: ClassThresholds = ClassThresholds(),
) -> ConflictClass:
    """Taxonomy class of an encounter from the two states at the CPA.

    Vertical: each aircraft is level when |rate| <= level_rate_fpm; one mover
    gives LA/LD by its sign, opposing movers give AD (same-sign movers fold
    into LA/LD). Lateral: track angle difference <= 45 deg is P, >= 135 deg
    is HO, else CR. Speed: |V1 - V2| within similar_speed_kt is Similar.
    """
    r1, r2 = ac1.vertical_rate_fpm, ac2.vertical_rate_fpm
    level1 = abs(r1) <= thresholds.level_rate_fpm
    level2 = abs(r2) <= thresholds.level_rate_fpm
    if level1 and level2:
        vertical = VerticalClass.LL
    elif not level1 and not level2:
        vertical = VerticalClass.AD if r1 * r2 < 0 else (
            VerticalClass.LA if r1 > 0 else VerticalClass.LD
        )
    else:
        mover = r2 if level1 else r1
        vertical = VerticalClass.LA if mover > 0 else VerticalClass.LD

    n1 = math.hypot(ac1.vx_kt, ac1.vy_kt)
    n2 = math.hypot(ac2.vx_kt, ac2.vy_kt)
    if n1 < 1e-9 or n2 < 1e-9:
        lateral = LateralClass.P
    else:
        cosang = (ac1.vx_kt * ac2.vx_kt + ac1.vy_kt * ac2.vy_kt) / (n1 * n2)
        theta = math.degrees(math.acos(min(1.0, max(-1.0, cosang))))
        if theta <= thresholds.parallel_max_deg:
            lateral = LateralClass.P
        elif theta >= thresholds.headon_min_deg:
            lateral = LateralClass.HO
        else:
            lateral = LateralClass.CR

    dv = ac1.ground_speed_kt - ac2.ground_speed_kt
    if abs(dv) <= thresholds.similar_speed_kt:
        speed = SpeedClass.SIMILAR
    elif dv > 0:
        speed = SpeedClass.AC1_FASTER
    else:
        speed = SpeedClass.AC2_FASTER

    return ConflictClass(vertical, lateral, speed)


# ---------------------------------------------------------------------------
# Detection over a rollout set
# ---------------------------------------------------------------------------


def _scan_rollout(
    trajectories: dict[str, Trajectory],
    source: RolloutSource,
    minima: SeparationMinima,
    thresholds: ClassThresholds,
) -> list[ConflictRecord]:
    records = []
    for cs1, cs2 in combinations(sorted(trajectories), 2):
        a, b = trajectories[cs1], trajectories[cs2]
        times, ia, ib = _align(a, b)
        if len(times) == 0:
            continue
        dx = a.x[ia] - b.x[ib]
        dy = a.y[ia] - b.y[ib]
        lat = np.hypot(dx, dy)
        dz = np.abs(a.altitude_ft[ia] - b.altitude_ft[ib])
        viol = (lat < minima.lateral_nm) & (dz < minima.vertical_ft)
        if not viol.any():
            continue
        hits = np.flatnonzero(viol)
        breaks = np.flatnonzero(np.diff(hits) > 1)
        run_starts = np.concatenate(([0], breaks + 1))
        run_ends = np.concatenate((breaks, [len(hits) - 1]))
        for s0, s1 in zip(run_starts, run_ends):
            run = hits[s0 : s1 + 1]
            k = run[int(np.argmin(lat[run]))]
            at1 = snapshot_at(a, int(ia[k]))
            at2 = snapshot_at(b, int(ib[k]))
            records.append(
                ConflictRecord(
                    pair=(cs1, cs2),
                    t_first_s=float(times[run[0]]),
                    t_last_s=float(times[run[-1]]),
                    cpa_time_s=float(times[k]),
                    cpa_distance_nm=float(lat[k]),
                    cpa_vertical_ft=float(dz[k]),
                    conflict_class=classify(at1, at2, thresholds),
                    source=source,
                    at_cpa=(at1, at2),
                )
            )
    return records


def detect(
    rollouts: RolloutSet,
    minima: SeparationMinima = SeparationMinima(),
    thresholds: ClassThresholds = ClassThresholds(),
) -> TechnicalSafetyRecord:
    """Compile the Technical Safety Record for one plan revision.

    Scans every rollout in the set (nominal, each perturbed realisation and
    each loss-of-comm cut), every aircraft pair and every shared sample;
    contiguous violation samples aggregate into one record.
    """
    records: list[ConflictRecord] = []
    for kind, key, rollout in rollouts.all_rollouts():
        source = RolloutSource(kind, None if key is None else float(key))
        records.extend(_scan_rollout(rollout.trajectories, source, minima, thresholds))
    records.sort(key=ConflictRecord.sort_key)
    return TechnicalSafetyRecord(plan_revision=rollouts.plan_revision,
                                 records=tuple(records))


def earliest_conflict(tsr: TechnicalSafetyRecord) -> ConflictRecord:
    """Temporal priority: minimum t_first, ties by pair then source rank."""
    if tsr.empty:
        raise ConflictError("technical safety record is empty")
    return tsr.records[0]
