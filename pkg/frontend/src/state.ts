// Console view state and the clearance queue's optimistic bookkeeping.
//
// Two invariants live here. The console is stateless with respect to
// safety: everything rendered comes from gateway payloads; this module only
// tracks UI state. And mode discipline: trace-detail endpoints may not be
// queried until the user explicitly opens Inspect.

import type { PendingClearanceDoc, SnapshotDoc, ViewState } from "./types.js";

export function initialViewState(): ViewState {
  return {
    mode: "operational",
    selected: null,
    selectedPair: null,
    cursorT: 0,
    followLive: true,
  };
}

const DETAIL_ENDPOINTS = ["/traces", "/aircraft/", "/timeline"];

/** Operational mode never issues trace-detail requests. */
export function endpointAllowed(state: ViewState, path: string): boolean {
  if (state.mode === "inspect") return true;
  return !DETAIL_ENDPOINTS.some((p) => path.includes(p));
}

export function setMode(state: ViewState, mode: ViewState["mode"]): ViewState {
  return { ...state, mode };
}

export function selectAircraft(state: ViewState, cs: string | null): ViewState {
  return { ...state, selected: cs };
}

export function selectPair(
  state: ViewState,
  pair: [string, string] | null,
): ViewState {
  return { ...state, selectedPair: pair };
}

export function scrubTo(
  state: ViewState,
  t: number,
  tMin: number,
  tMax: number,
): ViewState {
  // out-of-range cursor clamps to the recorded bounds
  const cursorT = Math.min(Math.max(t, tMin), tMax);
  return { ...state, cursorT, followLive: false };
}

export function followLive(state: ViewState, tLive: number): ViewState {
  return { ...state, cursorT: tLive, followLive: true };
}

// -- clearance queue -------------------------------------------------------

export interface QueueItem extends PendingClearanceDoc {
  /** action sent to the gateway, awaiting confirmation by a snapshot */
  inFlight?: "approve" | "reject" | "modify";
}

export class ClearanceQueue {
  items: Map<string, QueueItem> = new Map();

  /** Reconcile with a fresh snapshot; server state wins over optimism. */
  sync(snapshot: SnapshotDoc): void {
    const seen = new Set<string>();
    for (const pending of snapshot.pending_clearances) {
      seen.add(pending.clearance_id);
      const existing = this.items.get(pending.clearance_id);
      if (existing && existing.status === pending.status) continue;
      this.items.set(pending.clearance_id, { ...pending });
    }
    for (const id of [...this.items.keys()]) {
      if (!seen.has(id)) this.items.delete(id); // issued, completed or voided
    }
  }

  markInFlight(id: string, op: QueueItem["inFlight"]): void {
    const item = this.items.get(id);
    if (item) item.inFlight = op;
  }

  /** Gateway refused the action (e.g. constraint conflict): clear optimism. */
  rollback(id: string): void {
    const item = this.items.get(id);
    if (item) delete item.inFlight;
  }

  list(): QueueItem[] {
    return [...this.items.values()].sort((a, b) => a.proposed_t - b.proposed_t);
  }
}
