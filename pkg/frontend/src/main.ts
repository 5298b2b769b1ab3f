// Console wiring: the snapshot stream drives the operational view; Inspect
// mode adds plan inspection and the scrubbable resolution history. A replay
// file can be loaded instead of a live gateway.

import { GatewayClient } from "./api.js";
import { actionPoints, conflictsAt, frameIndexAt, strategiesFor } from "./frames.js";
import { fmtTime } from "./format.js";
import { renderConflictList, renderPlanInspector, renderResolutionHistory } from "./inspector.js";
import { aircraftAtPixel, drawRadar } from "./radar.js";
import { drawProfile } from "./profile.js";
import { renderQueue } from "./queue.js";
import { parseLogText } from "./replay.js";
import {
  ClearanceQueue,
  endpointAllowed,
  followLive,
  initialViewState,
  scrubTo,
  selectAircraft,
  setMode,
} from "./state.js";
import type {
  AirspaceDoc,
  FlightPlanDoc,
  FrameDoc,
  ResolutionDoc,
  SnapshotDoc,
  ViewState,
} from "./types.js";

const $ = <T extends HTMLElement>(id: string) =>
  document.getElementById(id) as T;

const client = new GatewayClient();
let view: ViewState = initialViewState();
const queue = new ClearanceQueue();

let airspace: AirspaceDoc | null = null;
let snapshot: SnapshotDoc | null = null;
let frames: FrameDoc[] = [];
let resolutions: ResolutionDoc[] = [];
let inspectedPlan: FlightPlanDoc | null = null;
let online = false;
let replayMode = false;
let lastTf: ReturnType<typeof drawRadar> | null = null;

function setStatus(text: string, stale = false): void {
  const bar = $("status");
  bar.textContent = text;
  bar.classList.toggle("stale", stale);
}

function note(message: string): void {
  $("notices").textContent = message;
}

function render(): void {
  if (!airspace || !snapshot) return;
  const tLive = snapshot.t_sim;
  const cursor = view.followLive ? tLive : view.cursorT;
  const frameIdx = frameIndexAt(frames, cursor);
  const frame = frameIdx >= 0 ? frames[frameIdx] : null;
  const shownConflicts = frame ? conflictsAt(frame, cursor) : snapshot.conflicts;

  const points = frame
    ? actionPoints(frame, snapshot.plan.plans, airspace)
    : [];
  lastTf = drawRadar(
    $("radar") as HTMLCanvasElement,
    airspace,
    view.followLive || !frame
      ? snapshot.aircraft
      : frameAircraft(frame),
    frame,
    shownConflicts,
    points,
    { lateralMinimumNm: 5.0, selected: view.selected },
  );
  drawProfile(
    $("profile") as HTMLCanvasElement,
    frame,
    view.selectedPair,
    frame ? frame.conflicts : [],
  );

  renderQueue($("queue"), queue, client, online && !replayMode, note);

  const alerts = $("alerts");
  alerts.replaceChildren();
  for (const alert of snapshot.alerts) {
    const row = document.createElement("div");
    row.className = "alert";
    row.textContent = `${alert.kind}: ${alert.message}`;
    alerts.appendChild(row);
  }

  $("cursor-label").textContent =
    `${fmtTime(cursor)} / ${fmtTime(tLive)}` +
    (view.followLive ? " (live)" : " (scrubbing)");
  const slider = $("scrubber") as HTMLInputElement;
  if (frames.length > 0) {
    slider.min = String(frames[0].t_sim);
    slider.max = String(frames[frames.length - 1].t_sim);
    if (view.followLive) slider.value = String(cursor);
  }

  const markerList = $("action-points");
  markerList.replaceChildren();
  for (const point of points) {
    const row = document.createElement("div");
    row.className = "action-point";
    row.title = point.label;
    row.textContent = `${point.callsign}: ${point.actionPhrase}`;
    markerList.appendChild(row);
  }

  if (view.mode === "inspect") {
    renderPlanInspector($("plan-inspector"), inspectedPlan);
    renderResolutionHistory($("history"), resolutions, cursor);
    renderConflictList(
      $("conflicts"),
      shownConflicts,
      frame ? strategiesFor(resolutions, frame.plan_revision) : [],
      (pair) => {
        view = { ...view, selectedPair: pair };
        render();
      },
    );
  }
  document.body.dataset.mode = view.mode;
}

function frameAircraft(frame: FrameDoc): SnapshotDoc["aircraft"] {
  // scrubbed view: place aircraft at the frame's first predicted sample
  const out: SnapshotDoc["aircraft"] = {};
  for (const [cs, traj] of Object.entries(frame.trajectories)) {
    out[cs] = {
      callsign: cs,
      route_id: "",
      lane: "",
      x: traj.x[0],
      y: traj.y[0],
      s_nm: 0,
      altitude_ft: traj.altitude_ft[0],
      ground_speed_kt: 0,
      vertical_rate_fpm: 0,
      cross_track_nm: 0,
    };
  }
  return out;
}

async function refreshInspectData(): Promise<void> {
  if (view.mode !== "inspect" || replayMode) return;
  // mode discipline: these endpoints are only touched in inspect mode
  if (!endpointAllowed(view, "/traces")) return;
  try {
    resolutions = (await client.traces()).records;
    const timeline = await client.timeline();
    const wanted = timeline.count;
    while (frames.length < wanted) {
      frames.push(await client.frame(frames.length));
    }
    if (view.selected) {
      inspectedPlan = await client.aircraftPlan(view.selected);
    }
  } catch {
    setStatus("gateway unreachable; data may be stale", true);
  }
}

function onSnapshot(snap: SnapshotDoc): void {
  snapshot = snap;
  online = true;
  queue.sync(snap);
  setStatus(
    `${replayMode ? "replay" : snap.state ?? "live"}  t=${fmtTime(snap.t_sim)}  ` +
    `cycle ${snap.cycle}  plan rev ${snap.plan_revision}  ` +
    `${Object.keys(snap.aircraft).length} aircraft`,
  );
  void refreshInspectData().then(render);
  render();
}

function wireControls(): void {
  $("mode-operational").onclick = () => {
    view = setMode(view, "operational");
    render();
  };
  $("mode-inspect").onclick = () => {
    view = setMode(view, "inspect");
    void refreshInspectData().then(render);
  };
  ($("scrubber") as HTMLInputElement).oninput = (e) => {
    const t = Number((e.target as HTMLInputElement).value);
    if (frames.length > 0) {
      view = scrubTo(view, t, frames[0].t_sim, frames[frames.length - 1].t_sim);
      render();
    }
  };
  $("follow-live").onclick = () => {
    view = followLive(view, snapshot?.t_sim ?? 0);
    render();
  };
  for (const [id, op] of [["btn-pause", "pause"], ["btn-resume", "resume"],
                          ["btn-step", "step"]] as const) {
    $(id).onclick = async () => {
      try {
        await client.control(op);
        note(`${op} acknowledged`);
      } catch (err) {
        note(String(err));
      }
    };
  }
  ($("radar") as HTMLCanvasElement).onclick = (e) => {
    if (!snapshot || !lastTf) return;
    const rect = (e.target as HTMLCanvasElement).getBoundingClientRect();
    const cs = aircraftAtPixel(
      snapshot.aircraft, lastTf, e.clientX - rect.left, e.clientY - rect.top,
    );
    view = selectAircraft(view, cs);
    void refreshInspectData().then(render);
  };
  ($("replay-file") as HTMLInputElement).onchange = async (e) => {
    const file = (e.target as HTMLInputElement).files?.[0];
    if (!file) return;
    loadReplay(await file.text());
  };
}

function loadReplay(text: string): void {
  const bundle = parseLogText(text);
  replayMode = true;
  airspace = bundle.airspace;
  frames = bundle.frames;
  resolutions = bundle.resolutions;
  view = { ...view, mode: "inspect", followLive: false };
  if (bundle.snapshots.length > 0) {
    view = scrubTo(
      view,
      bundle.snapshots[0].t_sim,
      bundle.frames[0]?.t_sim ?? 0,
      bundle.frames[bundle.frames.length - 1]?.t_sim ?? 0,
    );
    onSnapshot(bundle.snapshots[bundle.snapshots.length - 1]);
  }
  setStatus(`replay loaded: ${bundle.scenarioName} (${frames.length} frames)`);
}

async function start(): Promise<void> {
  wireControls();
  try {
    airspace = await client.airspace();
    onSnapshot(await client.snapshot());
    client.stream(onSnapshot, () =>
      setStatus("snapshot stream lost; data may be stale", true),
    );
  } catch {
    online = false;
    setStatus("no live gateway; load a replay file below", true);
  }
}

void start();
