import { describe, expect, it } from "vitest";

import { parseLogText } from "../src/replay.js";

function logText(): string {
  const lines = [
    { log_schema_version: 1, content_hash: "abc", records: 7 },
    { seq: 0, type: "scenario", t_sim: 0, name: "demo", seed: 1 },
    {
      seq: 1,
      type: "airspace",
      t_sim: 0,
      lane_offset_nm: 3.5,
      routes: { EB: { Centre: [[0, 0], [160, 0]] } },
      fixes: { WST: [0, 0], EST: [160, 0] },
      boundary: [[-10, -10], [170, -10], [170, 10], [-10, 10]],
      floor_fl: 200,
      ceiling_fl: 400,
    },
    {
      seq: 2,
      type: "state",
      t_sim: 0,
      cycle: 0,
      aircraft: { AC1: { callsign: "AC1", x: 0, y: 0, altitude_ft: 33000 } },
    },
    {
      seq: 3,
      type: "tsr",
      t_sim: 0,
      plan_revision: 1,
      count: 1,
      records: [
        {
          pair: ["AC1", "AC2"],
          t_first_s: 500,
          t_last_s: 540,
          cpa_time_s: 520,
          cpa_distance_nm: 0.4,
          cpa_vertical_ft: 0,
          class: ["LL", "HO", "Similar"],
          source: "nominal",
        },
      ],
    },
    {
      seq: 4,
      type: "resolution",
      t_sim: 0,
      outcome: "solved",
      plan_revision: 2,
      applied_strategies: ["lateral-offset-same-side"],
      applied_labels: ["lateral-offset-same-side[side=Left]"],
      max_depth: 1,
      expansions: 1,
      trace: { nodes: [] },
    },
    { seq: 5, type: "plan_adopted", t_sim: 0, revision: 2, plans: {}, constraints: [] },
    {
      seq: 6,
      type: "state",
      t_sim: 10,
      cycle: 1,
      aircraft: { AC1: { callsign: "AC1", x: 1.3, y: 0, altitude_ft: 33000 } },
    },
  ];
  return lines.map((l) => JSON.stringify(l)) .join("\n") + "\n";
}

describe("parseLogText", () => {
  it("synthesises frames, snapshots and traces from a written log", () => {
    const bundle = parseLogText(logText());
    expect(bundle.scenarioName).toBe("demo");
    expect(bundle.airspace?.fixes.EST).toEqual([160, 0]);
    expect(bundle.frames).toHaveLength(2);
    expect(bundle.frames[0].conflicts).toHaveLength(1);
    expect(bundle.frames[1].conflicts).toHaveLength(0);
    // the plan adopted at t=0 applies from the first state onward
    expect(bundle.frames[1].plan_revision).toBe(2);
    expect(bundle.resolutions).toHaveLength(1);
    expect(bundle.snapshots[1].done).toBe(true);
    expect(bundle.snapshots[0].aircraft.AC1.x).toBe(0);
  });

  it("rejects an empty file", () => {
    expect(() => parseLogText("\n\n")).toThrow("empty");
  });
});
