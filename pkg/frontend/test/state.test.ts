import { describe, expect, it } from "vitest";

import {
  allowedLabels, confirmDrafts, initialState, nodeStatus, reduce, replay,
  stageDraft, validateSnapshot,
} from "../src/state";
import type { GatewayEvent, SnapshotNode } from "../src/types";

const node = (extra: Partial<SnapshotNode>): SnapshotNode => ({
  id: 1, name: "n1", x: 0, y: 0, leaky: false, label: null,
  on_path: false, isolated: false, ...extra,
});

function sampleEvents(): GatewayEvent[] {
  const result = (k: number, delta: number | null) => ({
    window_index: k,
    path: [1, 3, 4],
    path_cost: 2.5 + k,
    isolation: [2],
    predicted_leaks: [2],
    qopt_delta: delta,
    qopt_delta_max: delta,
    label_counts: { leaks: 1, dangerous: 1, safe: 0 },
    dangerous: [2],
    safe: [],
    leaky: [2],
    threshold: 1.0,
    steps: 40,
    trapped: 0,
    truncated: 0,
  });
  return [
    { index: 0, type: "session_created",
      data: { session: "abc", config: { variant: "action_pruning" } } },
    { index: 1, type: "snapshot", data: { window_index: 0 } },
    { index: 2, type: "status_change", data: { status: "training", window_index: 0 } },
    { index: 3, type: "intervention_applied",
      data: { node: 2, label: "dangerous", effective_window: 1 } },
    { index: 4, type: "window_result", data: result(1, null) },
    { index: 5, type: "status_change",
      data: { status: "awaiting-operator", window_index: 1 } },
    { index: 6, type: "window_result", data: result(2, 12.5) },
  ] as GatewayEvent[];
}

describe("reduce", () => {
  it("is a pure function of the event log (replay reproduces state)", () => {
    const events = sampleEvents();
    const folded = replay(events);
    let incremental = initialState();
    for (const event of events) incremental = reduce(incremental, event);
    expect(incremental).toEqual(folded);
    expect(folded.sessionId).toBe("abc");
    expect(folded.variant).toBe("action_pruning");
    expect(folded.windowIndex).toBe(2);
    expect(folded.lastEventIndex).toBe(6);
  });

  it("appends chart points per window result", () => {
    const state = replay(sampleEvents());
    expect(state.pathCost.map((p) => p.window)).toEqual([1, 2]);
    // the first window has no predecessor, so no delta point
    expect(state.qoptDelta).toEqual([{ window: 2, value: 12.5 }]);
    expect(state.labelCounts).toHaveLength(2);
    expect(state.labelCounts[0]).toEqual(
      { window: 1, leaks: 1, dangerous: 1, safe: 0 });
  });

  it("does not mutate prior states", () => {
    const events = sampleEvents();
    const first = initialState();
    const second = reduce(first, events[0]);
    expect(first.sessionId).toBeNull();
    expect(second.sessionId).toBe("abc");
  });
});

describe("drafts", () => {
  it("confirms drafts only on intervention_applied", () => {
    let drafts = stageDraft(new Map(), 2, "dangerous");
    drafts = stageDraft(drafts, 5, "safe");
    const untouched = confirmDrafts(drafts, [
      { index: 0, type: "status_change", data: { status: "training" } },
    ] as GatewayEvent[]);
    expect(untouched.size).toBe(2);
    const confirmed = confirmDrafts(drafts, [
      { index: 1, type: "intervention_applied",
        data: { node: 2, label: "dangerous", effective_window: 1 } },
    ] as GatewayEvent[]);
    expect(confirmed.has(2)).toBe(false);
    expect(confirmed.has(5)).toBe(true);
  });
});

describe("nodeStatus precedence", () => {
  it("path beats labels, labels beat leaks, leaks beat isolation", () => {
    expect(nodeStatus(node({ on_path: true, label: "dangerous" }))).toBe("on-path");
    expect(nodeStatus(node({ label: "dangerous", leaky: true }))).toBe("dangerous");
    expect(nodeStatus(node({ label: "safe", leaky: true }))).toBe("safe");
    expect(nodeStatus(node({ leaky: true, isolated: true }))).toBe("leaky");
    expect(nodeStatus(node({ isolated: true }))).toBe("isolated");
    expect(nodeStatus(node({}))).toBe("normal");
  });
});

describe("allowedLabels", () => {
  it("offers no safe option under action pruning", () => {
    expect(allowedLabels("action_pruning")).toEqual(["dangerous"]);
    expect(allowedLabels("reward_shaping")).toContain("safe");
    expect(allowedLabels("reward_shaping")).toContain("clear");
  });
});

describe("validateSnapshot", () => {
  it("rejects malformed snapshots", () => {
    expect(() => validateSnapshot(null)).toThrow("malformed");
    expect(() => validateSnapshot({ nodes: "x" })).toThrow("malformed");
    expect(() => validateSnapshot({
      nodes: [{ id: "one" }], edges: [], path: [], window_index: 0,
    })).toThrow("malformed snapshot node");
  });
});
