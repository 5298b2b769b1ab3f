// Offline replay: load a written episode.log (line-delimited JSON) and
// synthesise the same structures the live gateway serves, so every view
// renders identically with no server.

import type {
  AirspaceDoc,
  AircraftStateDoc,
  ConflictDoc,
  FrameDoc,
  ResolutionDoc,
  SnapshotDoc,
} from "./types.js";

export interface ReplayBundle {
  header: Record<string, unknown>;
  airspace: AirspaceDoc | null;
  frames: FrameDoc[];
  snapshots: SnapshotDoc[];
  resolutions: ResolutionDoc[];
  alerts: { t_sim: number; kind: string; message: string }[];
  scenarioName: string;
}

export function parseLogText(text: string): ReplayBundle {
  const lines = text.split("\n").filter((ln) => ln.trim().length > 0);
  if (lines.length === 0) throw new Error("empty log file");
  const header = JSON.parse(lines[0]) as Record<string, unknown>;
  const records = lines.slice(1).map((ln) => JSON.parse(ln));

  let airspace: AirspaceDoc | null = null;
  let scenarioName = "replay";
  const resolutions: ResolutionDoc[] = [];
  const alerts: ReplayBundle["alerts"] = [];
  const states: { t_sim: number; cycle: number; aircraft: Record<string, AircraftStateDoc> }[] = [];
  const tsrByCycleTime = new Map<number, ConflictDoc[]>();
  const planByTime: { t_sim: number; revision: number; plan: SnapshotDoc["plan"] }[] = [];

  for (const r of records) {
    switch (r.type) {
      case "scenario":
        scenarioName = r.name ?? "replay";
        break;
      case "airspace":
        airspace = r as unknown as AirspaceDoc;
        break;
      case "state":
        states.push({ t_sim: r.t_sim, cycle: r.cycle, aircraft: r.aircraft });
        break;
      case "tsr":
        tsrByCycleTime.set(r.t_sim, r.records as ConflictDoc[]);
        break;
      case "resolution":
        resolutions.push(r as unknown as ResolutionDoc);
        break;
      case "plan_adopted":
        planByTime.push({ t_sim: r.t_sim, revision: r.revision, plan: r });
        break;
      case "alert":
        alerts.push({ t_sim: r.t_sim, kind: r.kind, message: r.message });
        break;
    }
  }

  // ground-truth frames: one per logged state record; predicted conflicts
  // attach from the TSR logged in the same cycle (if any)
  const frames: FrameDoc[] = states.map((s) => ({
    cycle: s.cycle,
    t_sim: s.t_sim,
    plan_revision: revisionAt(planByTime, s.t_sim),
    trajectories: Object.fromEntries(
      Object.entries(s.aircraft).map(([cs, st]) => [
        cs,
        { t: [s.t_sim], x: [st.x], y: [st.y], altitude_ft: [st.altitude_ft] },
      ]),
    ),
    conflicts: tsrByCycleTime.get(s.t_sim) ?? [],
  }));

  const snapshots: SnapshotDoc[] = states.map((s, k) => ({
    t_sim: s.t_sim,
    cycle: s.cycle,
    done: k === states.length - 1,
    plan_revision: revisionAt(planByTime, s.t_sim),
    aircraft: s.aircraft,
    plan: { revision: revisionAt(planByTime, s.t_sim), plans: {}, constraints: [] },
    pending_clearances: [],
    alerts: alerts.filter((a) => a.t_sim <= s.t_sim).slice(-5),
    conflicts: tsrByCycleTime.get(s.t_sim) ?? [],
  }));

  return { header, airspace, frames, snapshots, resolutions, alerts, scenarioName };
}

function revisionAt(
  plans: { t_sim: number; revision: number }[],
  t: number,
): number {
  let rev = 0;
  for (const p of plans) {
    if (p.t_sim <= t) rev = p.revision;
  }
  return rev;
}
