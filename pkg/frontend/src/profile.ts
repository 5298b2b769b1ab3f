// Vertical-profile pane: altitude traces of the selected pair over the
// frame's prediction window, with the conflict window shaded.

import type { ConflictDoc, FrameDoc } from "./types.js";
import { fmtLevel } from "./format.js";

const COLORS = ["#46a0d4", "#46d46a", "#d9a441", "#c678dd"];

export function drawProfile(
  canvas: HTMLCanvasElement,
  frame: FrameDoc | null,
  pair: [string, string] | null,
  conflicts: ConflictDoc[],
): void {
  const ctx = canvas.getContext("2d")!;
  const { width, height } = canvas;
  ctx.fillStyle = "#0b0f14";
  ctx.fillRect(0, 0, width, height);
  if (!frame) return;

  const names = pair
    ? pair.filter((cs) => cs in frame.trajectories)
    : Object.keys(frame.trajectories).slice(0, 4);
  if (names.length === 0) return;

  let tMin = Infinity;
  let tMax = -Infinity;
  let aMin = Infinity;
  let aMax = -Infinity;
  for (const cs of names) {
    const traj = frame.trajectories[cs];
    tMin = Math.min(tMin, traj.t[0]);
    tMax = Math.max(tMax, traj.t[traj.t.length - 1]);
    aMin = Math.min(aMin, ...traj.altitude_ft);
    aMax = Math.max(aMax, ...traj.altitude_ft);
  }
  aMin -= 600;
  aMax += 600;
  const pad = 28;
  const sx = (t: number) =>
    pad + ((t - tMin) / Math.max(tMax - tMin, 1)) * (width - 2 * pad);
  const sy = (a: number) =>
    height - pad - ((a - aMin) / Math.max(aMax - aMin, 1)) * (height - 2 * pad);

  // conflict windows shaded behind the traces
  ctx.fillStyle = "rgba(224, 82, 82, 0.15)";
  for (const c of conflicts) {
    if (pair && !(pair.includes(c.pair[0]) && pair.includes(c.pair[1]))) continue;
    ctx.fillRect(
      sx(c.t_first_s),
      pad,
      Math.max(sx(c.t_last_s) - sx(c.t_first_s), 2),
      height - 2 * pad,
    );
  }

  ctx.font = "10px monospace";
  names.forEach((cs, k) => {
    const traj = frame.trajectories[cs];
    ctx.strokeStyle = COLORS[k % COLORS.length];
    ctx.fillStyle = ctx.strokeStyle;
    ctx.beginPath();
    for (let i = 0; i < traj.t.length; i++) {
      const px = sx(traj.t[i]);
      const py = sy(traj.altitude_ft[i]);
      if (i === 0) ctx.moveTo(px, py);
      else ctx.lineTo(px, py);
    }
    ctx.stroke();
    const last = traj.altitude_ft[traj.altitude_ft.length - 1];
    ctx.fillText(`${cs} ${fmtLevel(last)}`, width - pad - 80, pad + 12 * (k + 1));
  });

  ctx.strokeStyle = "#2a3b4d";
  ctx.strokeRect(pad, pad, width - 2 * pad, height - 2 * pad);
}
