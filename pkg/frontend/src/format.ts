// Human-readable formatting of schema values.

import type { ConditionDoc, ConflictDoc } from "./types.js";

export function fmtTime(t: number): string {
  const m = Math.floor(t / 60);
  const s = Math.round(t - m * 60);
  return `${String(m).padStart(2, "0")}:${String(s).padStart(2, "0")}`;
}

export function fmtLevel(altitudeFt: number): string {
  return `FL${Math.round(altitudeFt / 100)}`;
}

export function fmtCondition(c: ConditionDoc): string {
  switch (c.type) {
    case "Immediate":
      return "now";
    case "TimeReached":
      return `at t=${fmtTime(c.time_s ?? 0)}`;
    case "AtFix":
      return `within ${c.tolerance_nm} NM of ${c.fix_id}`;
    case "LateralSeparationExceeds":
      return `separation from ${c.other} > ${c.threshold_nm} NM`;
    case "AircraftPassedLaterally":
      return `passed ${c.other}`;
    case "ReachedLevel":
      return `reaching FL${c.fl}`;
    case "Not":
      return `not (${fmtCondition(c.inner!)})`;
    case "And":
      return (c.terms ?? []).map(fmtCondition).join(" and ");
    case "Or":
      return (c.terms ?? []).map(fmtCondition).join(" or ");
    default:
      return c.type;
  }
}

export function fmtClass(cls: [string, string, string]): string {
  return `${cls[0]}/${cls[1]}/${cls[2]}`;
}

export function fmtConflict(c: ConflictDoc): string {
  return (
    `${c.pair[0]} – ${c.pair[1]}  ${fmtClass(c.class)}  ` +
    `first ${fmtTime(c.t_first_s)}, CPA ${c.cpa_distance_nm.toFixed(2)} NM ` +
    `at ${fmtTime(c.cpa_time_s)}  [${c.source}]`
  );
}
