import { describe, expect, it } from "vitest";

import { fmtClass, fmtCondition, fmtConflict, fmtTime } from "../src/format.js";

describe("formatting", () => {
  it("times as mm:ss", () => {
    expect(fmtTime(0)).toBe("00:00");
    expect(fmtTime(605)).toBe("10:05");
  });

  it("conditions read like clearance language", () => {
    expect(fmtCondition({ type: "Immediate" })).toBe("now");
    expect(
      fmtCondition({ type: "AtFix", fix_id: "EST", tolerance_nm: 40 }),
    ).toBe("within 40 NM of EST");
    expect(
      fmtCondition({
        type: "And",
        terms: [
          { type: "AircraftPassedLaterally", other: "AC2" },
          { type: "LateralSeparationExceeds", other: "AC2", threshold_nm: 10 },
        ],
      }),
    ).toBe("passed AC2 and separation from AC2 > 10 NM");
  });

  it("conflict summary carries class, CPA and source", () => {
    const text = fmtConflict({
      pair: ["AC1", "AC2"],
      t_first_s: 565,
      t_last_s: 620,
      cpa_time_s: 590,
      cpa_distance_nm: 0.44,
      cpa_vertical_ft: 0,
      class: ["LL", "HO", "Similar"],
      source: "perturbed(0)",
    });
    expect(text).toContain("LL/HO/Similar");
    expect(text).toContain("0.44 NM");
    expect(text).toContain("perturbed(0)");
    expect(fmtClass(["LL", "HO", "Similar"])).toBe("LL/HO/Similar");
  });
});
