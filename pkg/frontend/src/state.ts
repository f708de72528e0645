import type {
  GatewayEvent, NodeLabel, NodeStatus, SessionStatus, Snapshot, SnapshotNode,
  Variant, WindowResult,
} from "./types";

/** Chart buffers are append-only within a session. */
export interface ChartPoint { window: number; value: number }
export interface LabelCountPoint {
  window: number; leaks: number; dangerous: number; safe: number;
}

/** Everything derived from the gateway event log. Replaying the log
 *  through reduce() reproduces this state exactly. */
export interface ViewState {
  sessionId: string | null;
  status: SessionStatus;
  windowIndex: number;
  variant: Variant;
  snapshot: Snapshot | null;
  results: WindowResult[];
  qoptDelta: ChartPoint[];
  pathCost: ChartPoint[];
  labelCounts: LabelCountPoint[];
  lastEventIndex: number;
}

export function initialState(): ViewState {
  return {
    sessionId: null,
    status: "idle",
    windowIndex: 0,
    variant: "reward_shaping",
    snapshot: null,
    results: [],
    qoptDelta: [],
    pathCost: [],
    labelCounts: [],
    lastEventIndex: -1,
  };
}

/** Pure fold step: ViewState x GatewayEvent -> ViewState. */
export function reduce(state: ViewState, event: GatewayEvent): ViewState {
  const next: ViewState = { ...state, lastEventIndex: event.index };
  switch (event.type) {
    case "session_created": {
      const data = event.data as { session: string; config: { variant: Variant } };
      next.sessionId = data.session;
      next.variant = data.config.variant;
      break;
    }
    case "status_change": {
      const data = event.data as { status: SessionStatus; window_index: number };
      next.status = data.status;
      next.windowIndex = data.window_index;
      break;
    }
    case "snapshot":
      next.snapshot = event.data as unknown as Snapshot;
      break;
    case "window_result": {
      const result = event.data as unknown as WindowResult;
      next.results = [...state.results, result];
      next.windowIndex = result.window_index;
      if (result.qopt_delta !== null) {
        next.qoptDelta = [...state.qoptDelta,
                          { window: result.window_index, value: result.qopt_delta }];
      }
      if (result.path_cost !== null) {
        next.pathCost = [...state.pathCost,
                         { window: result.window_index, value: result.path_cost }];
      }
      next.labelCounts = [...state.labelCounts, {
        window: result.window_index,
        leaks: result.label_counts.leaks,
        dangerous: result.label_counts.dangerous,
        safe: result.label_counts.safe,
      }];
      break;
    }
    case "intervention_applied":
      break; // applied labels arrive via the next snapshot
  }
  return next;
}

export function replay(events: GatewayEvent[]): ViewState {
  return events.reduce(reduce, initialState());
}

/** Pending marks, drafted locally until the gateway confirms them.
 *  Kept outside the event-derived state on purpose: nothing is rendered
 *  as applied before an intervention_applied event arrives. */
export type Drafts = Map<number, NodeLabel>;

export function stageDraft(drafts: Drafts, node: number, label: NodeLabel): Drafts {
  const next = new Map(drafts);
  next.set(node, label);
  return next;
}

export function dropDraft(drafts: Drafts, node: number): Drafts {
  const next = new Map(drafts);
  next.delete(node);
  return next;
}

/** Drop every draft the gateway has now confirmed. */
export function confirmDrafts(drafts: Drafts, events: GatewayEvent[]): Drafts {
  let next = drafts;
  for (const event of events) {
    if (event.type === "intervention_applied") {
      const node = (event.data as { node: number }).node;
      if (next.has(node)) next = dropDraft(next, node);
    }
  }
  return next;
}

/** Single display status per node; overlaps resolve by precedence. */
export function nodeStatus(node: SnapshotNode): NodeStatus {
  if (node.on_path) return "on-path";
  if (node.label === "dangerous") return "dangerous";
  if (node.label === "safe") return "safe";
  if (node.leaky) return "leaky";
  if (node.isolated) return "isolated";
  return "normal";
}

export function statusLegend(): NodeStatus[] {
  return ["normal", "leaky", "dangerous", "safe", "on-path", "isolated"];
}

/** Labels the operator may choose for a node under the session variant:
 *  pruning permits only new dangerous marks. */
export function allowedLabels(variant: Variant): NodeLabel[] {
  return variant === "action_pruning"
    ? ["dangerous"]
    : ["dangerous", "safe", "clear"];
}

export function validateSnapshot(raw: unknown): Snapshot {
  const snap = raw as Snapshot;
  if (!snap || !Array.isArray(snap.nodes) || !Array.isArray(snap.edges)
      || !Array.isArray(snap.path) || typeof snap.window_index !== "number") {
    throw new Error("malformed snapshot");
  }
  for (const node of snap.nodes) {
    if (typeof node.id !== "number" || typeof node.x !== "number"
        || typeof node.y !== "number") {
      throw new Error(`malformed snapshot node: ${JSON.stringify(node)}`);
    }
  }
  return snap;
}
