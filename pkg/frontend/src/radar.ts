// Plan-view radar rendering on a 2D canvas: lanes, aircraft, predicted
// trajectories, anticipated action points, conflict markers and the safety
// buffer circle at the lateral minimum radius.

import type { ActionPoint } from "./frames.js";
import type {
  AirspaceDoc,
  AircraftStateDoc,
  ConflictDoc,
  FrameDoc,
} from "./types.js";
import { fmtLevel } from "./format.js";

export interface RadarOptions {
  lateralMinimumNm: number;
  selected: string | null;
}

interface Transform {
  toX(x: number): number;
  toY(y: number): number;
  scale: number;
}

function fitTransform(
  airspace: AirspaceDoc,
  width: number,
  height: number,
): Transform {
  const xs = airspace.boundary.map((p) => p[0]);
  const ys = airspace.boundary.map((p) => p[1]);
  const minX = Math.min(...xs);
  const maxX = Math.max(...xs);
  const minY = Math.min(...ys);
  const maxY = Math.max(...ys);
  const pad = 12;
  const scale = Math.min(
    (width - 2 * pad) / Math.max(maxX - minX, 1),
    (height - 2 * pad) / Math.max(maxY - minY, 1),
  );
  return {
    scale,
    toX: (x) => pad + (x - minX) * scale,
    toY: (y) => height - pad - (y - minY) * scale, // north up
  };
}

export function drawRadar(
  canvas: HTMLCanvasElement,
  airspace: AirspaceDoc,
  aircraft: Record<string, AircraftStateDoc>,
  frame: FrameDoc | null,
  conflicts: ConflictDoc[],
  points: ActionPoint[],
  options: RadarOptions,
): Transform {
  const ctx = canvas.getContext("2d")!;
  const { width, height } = canvas;
  const tf = fitTransform(airspace, width, height);

  ctx.fillStyle = "#0b0f14";
  ctx.fillRect(0, 0, width, height);

  // sector boundary
  ctx.strokeStyle = "#2a3b4d";
  ctx.lineWidth = 1.5;
  ctx.beginPath();
  airspace.boundary.forEach(([x, y], k) => {
    if (k === 0) ctx.moveTo(tf.toX(x), tf.toY(y));
    else ctx.lineTo(tf.toX(x), tf.toY(y));
  });
  ctx.closePath();
  ctx.stroke();

  // lanes: centre solid, offsets dashed
  for (const lanes of Object.values(airspace.routes)) {
    for (const [desig, poly] of Object.entries(lanes)) {
      ctx.beginPath();
      poly.forEach(([x, y], k) => {
        if (k === 0) ctx.moveTo(tf.toX(x), tf.toY(y));
        else ctx.lineTo(tf.toX(x), tf.toY(y));
      });
      if (desig === "Centre") {
        ctx.strokeStyle = "#3d5166";
        ctx.setLineDash([]);
      } else {
        ctx.strokeStyle = "#22303f";
        ctx.setLineDash([4, 4]);
      }
      ctx.lineWidth = 1;
      ctx.stroke();
      ctx.setLineDash([]);
    }
  }

  // fixes
  ctx.fillStyle = "#51657a";
  ctx.font = "10px monospace";
  for (const [fid, [x, y]] of Object.entries(airspace.fixes)) {
    const px = tf.toX(x);
    const py = tf.toY(y);
    ctx.beginPath();
    ctx.moveTo(px, py - 4);
    ctx.lineTo(px + 4, py + 3);
    ctx.lineTo(px - 4, py + 3);
    ctx.closePath();
    ctx.fill();
    ctx.fillText(fid, px + 6, py + 4);
  }

  // predicted trajectories from the verified frame
  if (frame) {
    ctx.strokeStyle = "#1f4d3a";
    ctx.lineWidth = 1;
    for (const traj of Object.values(frame.trajectories)) {
      ctx.beginPath();
      for (let k = 0; k < traj.x.length; k++) {
        const px = tf.toX(traj.x[k]);
        const py = tf.toY(traj.y[k]);
        if (k === 0) ctx.moveTo(px, py);
        else ctx.lineTo(px, py);
      }
      ctx.stroke();
    }
  }

  // anticipated action points (hover text kept in the marker list panel)
  ctx.fillStyle = "#d9a441";
  for (const point of points) {
    ctx.beginPath();
    ctx.arc(tf.toX(point.x), tf.toY(point.y), 3, 0, Math.PI * 2);
    ctx.fill();
  }

  // conflict markers at the CPA of any conflict in view
  ctx.strokeStyle = "#e05252";
  ctx.lineWidth = 2;
  for (const conflict of conflicts) {
    const a = aircraft[conflict.pair[0]];
    const b = aircraft[conflict.pair[1]];
    const cx = a && b ? (a.x + b.x) / 2 : null;
    const cy = a && b ? (a.y + b.y) / 2 : null;
    if (cx === null || cy === null) continue;
    const px = tf.toX(cx);
    const py = tf.toY(cy!);
    ctx.beginPath();
    ctx.moveTo(px - 6, py - 6);
    ctx.lineTo(px + 6, py + 6);
    ctx.moveTo(px + 6, py - 6);
    ctx.lineTo(px - 6, py + 6);
    ctx.stroke();
  }

  // aircraft: blip, velocity leader, safety buffer, label
  for (const st of Object.values(aircraft)) {
    const px = tf.toX(st.x);
    const py = tf.toY(st.y);
    const isSelected = options.selected === st.callsign;
    ctx.strokeStyle = isSelected ? "#9ee07a" : "#46d46a";
    ctx.fillStyle = ctx.strokeStyle;

    ctx.beginPath();
    ctx.arc(px, py, 3.5, 0, Math.PI * 2);
    ctx.fill();

    // safety buffer circle at the lateral minimum radius
    ctx.beginPath();
    ctx.setLineDash([2, 3]);
    ctx.arc(px, py, options.lateralMinimumNm * tf.scale, 0, Math.PI * 2);
    ctx.lineWidth = 1;
    ctx.stroke();
    ctx.setLineDash([]);

    ctx.font = "11px monospace";
    ctx.fillText(
      `${st.callsign} ${fmtLevel(st.altitude_ft)} ${Math.round(st.ground_speed_kt)}kt`,
      px + 8,
      py - 8,
    );
  }

  return tf;
}

/** Hit test for clicking aircraft on the radar. */
export function aircraftAtPixel(
  aircraft: Record<string, AircraftStateDoc>,
  tf: Transform,
  px: number,
  py: number,
): string | null {
  for (const st of Object.values(aircraft)) {
    if (Math.hypot(tf.toX(st.x) - px, tf.toY(st.y) - py) < 10) {
      return st.callsign;
    }
  }
  return null;
}
