/** Wire types, mirroring the gateway's JSON bodies. */

export type Variant = "plain" | "reward_shaping" | "action_pruning";
export type SessionStatus = "idle" | "training" | "awaiting-operator" | "finished";
export type NodeLabel = "dangerous" | "safe" | "clear";

export interface SnapshotNode {
  id: number;
  name: string;
  x: number;
  y: number;
  leaky: boolean;
  label: "dangerous" | "safe" | null;
  on_path: boolean;
  isolated: boolean;
}

export interface Snapshot {
  session: string;
  status: SessionStatus;
  window_index: number;
  max_windows: number;
  variant: Variant;
  source: number;
  dest: number;
  nodes: SnapshotNode[];
  edges: { from: number; to: number }[];
  path: number[];
  isolation: number[];
  predicted_leaks: number[];
  last_result: WindowResult | null;
}

export interface WindowResult {
  window_index: number;
  path: number[] | null;
  path_cost: number | null;
  isolation: number[];
  predicted_leaks: number[];
  qopt_delta: number | null;
  qopt_delta_max: number | null;
  label_counts: { leaks: number; dangerous: number; safe: number };
  dangerous: number[];
  safe: number[];
  leaky: number[];
  threshold: number | null;
  steps: number;
  trapped: number;
  truncated: number;
}

export interface GatewayEvent {
  index: number;
  type: "session_created" | "status_change" | "intervention_applied"
      | "window_result" | "snapshot";
  data: Record<string, unknown>;
}

export interface InterventionAck {
  staged: boolean;
  node: number;
  label: string;
  effective_window: number;
}

export interface GatewayError {
  code: string;
  reason: string;
}

/** Display status, one per node; precedence resolves overlaps. */
export type NodeStatus =
  "normal" | "leaky" | "dangerous" | "safe" | "on-path" | "isolated";

/** Paper-style color semantics: leaks purple, dangerous red, safe green,
 *  path starred blue. */
export const STATUS_COLORS: Record<NodeStatus, string> = {
  "on-path": "#1c7ed6",
  dangerous: "#e03131",
  safe: "#2f9e44",
  leaky: "#8e44ad",
  isolated: "#f08c00",
  normal: "#ced4da",
};
