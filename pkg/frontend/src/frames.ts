// Timeline scrubbing: frame lookup, conflicts covering a cursor time, the
// strategy chosen for a conflict, and anticipated action points. Pure
// functions over gateway payloads; nothing here recomputes separation.

import type {
  AirspaceDoc,
  ConflictDoc,
  FlightPlanDoc,
  FrameDoc,
  ResolutionDoc,
} from "./types.js";

/** Index of the latest frame at or before t (clamps to the ends). */
export function frameIndexAt(frames: { t_sim: number }[], t: number): number {
  if (frames.length === 0) return -1;
  if (t <= frames[0].t_sim) return 0;
  let lo = 0;
  let hi = frames.length - 1;
  while (lo < hi) {
    const mid = Math.ceil((lo + hi) / 2);
    if (frames[mid].t_sim <= t) lo = mid;
    else hi = mid - 1;
  }
  return lo;
}

/** Conflicts whose violation interval covers the cursor time. */
export function conflictsAt(frame: FrameDoc, t: number): ConflictDoc[] {
  return frame.conflicts.filter((c) => c.t_first_s <= t && t <= c.t_last_s);
}

/** The strategy labels the resolver applied for the frame's plan revision. */
export function strategiesFor(
  resolutions: ResolutionDoc[],
  planRevision: number,
): string[] {
  let best: ResolutionDoc | null = null;
  for (const r of resolutions) {
    if (r.plan_revision <= planRevision) {
      if (best === null || r.plan_revision > best.plan_revision) best = r;
    }
  }
  return best ? best.applied_labels : [];
}

export interface ActionPoint {
  callsign: string;
  x: number;
  y: number;
  label: string; // trigger condition as hover text
  actionPhrase: string;
}

/**
 * Anticipated action points: where along the predicted trajectory each
 * pending AtFix-triggered action will fire. Display geometry only.
 */
export function actionPoints(
  frame: FrameDoc,
  plans: Record<string, FlightPlanDoc>,
  airspace: AirspaceDoc,
): ActionPoint[] {
  const out: ActionPoint[] = [];
  for (const [cs, traj] of Object.entries(frame.trajectories)) {
    const plan = plans[cs];
    if (!plan) continue;
    for (const chain of Object.values(plan.chains)) {
      for (const pa of chain) {
        const status = plan.statuses?.[pa.id] ?? "Pending";
        if (status !== "Pending") continue;
        if (pa.trigger.type !== "AtFix") continue;
        const fix = airspace.fixes[pa.trigger.fix_id ?? ""];
        if (!fix) continue;
        const tol = pa.trigger.tolerance_nm ?? 0;
        // first predicted sample inside the trigger distance
        for (let k = 0; k < traj.t.length; k++) {
          const d = Math.hypot(traj.x[k] - fix[0], traj.y[k] - fix[1]);
          if (d <= tol) {
            out.push({
              callsign: cs,
              x: traj.x[k],
              y: traj.y[k],
              label: `${cs}: when within ${tol} NM of ${pa.trigger.fix_id}`,
              actionPhrase: pa.action.phrase,
            });
            break;
          }
        }
      }
    }
  }
  return out;
}
