// Gateway payload types. These mirror the JSON schemas the gateway and the
// event log share, so the console can render live snapshots and replay
// files with the same code.

export interface ConditionDoc {
  type: string;
  fix_id?: string;
  tolerance_nm?: number;
  other?: string;
  threshold_nm?: number;
  fl?: number;
  time_s?: number;
  inner?: ConditionDoc;
  terms?: ConditionDoc[];
}

export interface ActionDoc {
  type: string;
  axis: string;
  phrase: string;
  fl?: number;
  kt?: number;
  route_id?: string;
  designation?: string;
  fix_id?: string;
}

export interface PlannedActionDoc {
  id: string;
  trigger: ConditionDoc;
  action: ActionDoc;
  completion: ConditionDoc;
  provenance: string;
}

export interface FlightPlanDoc {
  callsign: string;
  route_id: string;
  exit_fix: string;
  exit_fl: number;
  pfl: number;
  chains: Record<string, PlannedActionDoc[]>;
  statuses?: Record<string, string>;
}

export interface AirspacePlanDoc {
  revision: number;
  plans: Record<string, FlightPlanDoc>;
  constraints: ConstraintDoc[];
}

export interface ConstraintDoc {
  callsign: string;
  axis: string;
  direction: string;
  release: ConditionDoc;
  source_strategy: string;
}

export interface AircraftStateDoc {
  callsign: string;
  route_id: string;
  lane: string;
  x: number;
  y: number;
  s_nm: number;
  altitude_ft: number;
  ground_speed_kt: number;
  vertical_rate_fpm: number;
  cross_track_nm: number;
}

export interface PendingClearanceDoc {
  clearance_id: string;
  callsign: string;
  status: string;
  action: ActionDoc;
  proposed_t: number;
}

export interface ConflictDoc {
  pair: [string, string];
  t_first_s: number;
  t_last_s: number;
  cpa_time_s: number;
  cpa_distance_nm: number;
  cpa_vertical_ft: number;
  class: [string, string, string];
  source: string;
}

export interface SnapshotDoc {
  t_sim: number;
  cycle: number;
  done: boolean;
  state?: string;
  plan_revision: number;
  aircraft: Record<string, AircraftStateDoc>;
  plan: AirspacePlanDoc;
  pending_clearances: PendingClearanceDoc[];
  alerts: { kind: string; message: string }[];
  conflicts: ConflictDoc[];
}

export interface FrameDoc {
  cycle: number;
  t_sim: number;
  plan_revision: number;
  trajectories: Record<
    string,
    { t: number[]; x: number[]; y: number[]; altitude_ft: number[] }
  >;
  conflicts: ConflictDoc[];
}

export interface TraceAttemptDoc {
  strategy: string;
  label: string;
  child_node: number | null;
  outcome: string;
  footprint: [string, string, string][];
}

export interface TraceNodeDoc {
  node_id: number;
  depth: number;
  parent_id: number | null;
  plan_revision: number;
  tsr_size: number;
  conflict: {
    pair: string[];
    t_first_s: number;
    cpa_time_s: number;
    cpa_distance_nm: number;
    class: string[];
    source: string;
  } | null;
  attempts: TraceAttemptDoc[];
  outcome: string;
}

export interface ResolutionDoc {
  t_sim: number;
  outcome: string;
  plan_revision: number;
  applied_strategies: string[];
  applied_labels: string[];
  max_depth: number;
  expansions: number;
  trace: { nodes: TraceNodeDoc[] };
}

export interface AirspaceDoc {
  lane_offset_nm: number;
  routes: Record<string, Record<string, [number, number][]>>;
  fixes: Record<string, [number, number]>;
  boundary: [number, number][];
  floor_fl: number;
  ceiling_fl: number;
}

export type ViewMode = "operational" | "inspect";

export interface ViewState {
  mode: ViewMode;
  selected: string | null; // callsign
  selectedPair: [string, string] | null;
  cursorT: number; // timeline cursor, simulated seconds
  followLive: boolean;
}
