"""Leak histories, windowed batching, discounted fault scores and the
per-window environment cost matrix.

All functions here are pure over immutable inputs.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .topology import NetworkGraph


class FaultError(ValueError):
    pass


@dataclass(frozen=True)
class LeakEvent:
    seq: int
    node: int
    repair_hours: float
    cost: float

    def __post_init__(self):
        if self.repair_hours < 0:
            raise FaultError(f"negative repair time on event {self.seq}")
        if self.cost < 0:
            raise FaultError(f"negative cost on event {self.seq}")


@dataclass(frozen=True)
class WindowBatch:
    index: int  # 1-based window index
    events: tuple[LeakEvent, ...]
    is_partial: bool


@dataclass(frozen=True)
class FaultWeights:
    """Aggregation weights, the fault-to-edge-cost coupling and the
    history discount; one typical leak should land at O(1) cost units
    against unit base costs."""
    w_count: float = 1.0
    w_time: float = 0.1
    w_cost: float = 0.001
    coupling: float = 1.0
    discount: float = 0.9

    def __post_init__(self):
        for name in ("w_count", "w_time", "w_cost", "coupling"):
            if getattr(self, name) < 0:
                raise FaultError(f"{name} must be >= 0")
        if not (0.0 < self.discount < 1.0):
            raise FaultError("discount must lie in (0, 1)")


@dataclass(frozen=True)
class FaultScores:
    index: int  # window index this score state reflects (0 = no history)
    values: np.ndarray  # float64[n_nodes], all >= 0

    def score(self, node: int) -> float:
        return float(self.values[node - 1])


@dataclass(frozen=True)
class RewardMatrix:
    index: int
    values: np.ndarray  # float64[n_edges], aligned with graph edge ids


def chunk_events(events: list[LeakEvent], m: int) -> list[WindowBatch]:
    """Split an ordered event list into consecutive batches of m events;
    a shorter trailing batch is kept and flagged partial."""
    if m < 1:
        raise FaultError(f"window size must be >= 1, got {m}")
    prev_seq = None
    for ev in events:
        if prev_seq is not None and ev.seq <= prev_seq:
            raise FaultError(f"events out of order at seq {ev.seq}")
        prev_seq = ev.seq
    batches = []
    for k, start in enumerate(range(0, len(events), m), start=1):
        chunk = tuple(events[start:start + m])
        batches.append(WindowBatch(k, chunk, is_partial=len(chunk) < m))
    return batches


def initial_scores(g: NetworkGraph) -> FaultScores:
    return FaultScores(0, np.zeros(g.n_nodes))


def batch_aggregate(g: NetworkGraph, batch: WindowBatch, w: FaultWeights) -> np.ndarray:
    """Per-node weighted sum of this batch: leak count, repair hours, cost."""
    agg = np.zeros(g.n_nodes)
    for ev in batch.events:
        if not (1 <= ev.node <= g.n_nodes):
            raise FaultError(f"leak event {ev.seq} at unknown node {ev.node}")
        agg[ev.node - 1] += (w.w_count
                             + w.w_time * ev.repair_hours
                             + w.w_cost * ev.cost)
    return agg


def update_fault_scores(prev: FaultScores, batch: WindowBatch,
                        w: FaultWeights, g: NetworkGraph) -> FaultScores:
    """One step of the geometric recursion: discount all history, add this
    window's aggregate. Nodes absent from the batch decay only."""
    if prev.index != batch.index - 1:
        raise FaultError(
            f"window index mismatch: scores at {prev.index}, batch is {batch.index}")
    values = w.discount * prev.values + batch_aggregate(g, batch, w)
    return FaultScores(batch.index, values)


def build_reward_matrix(g: NetworkGraph, f: FaultScores, w: FaultWeights) -> RewardMatrix:
    """Edge cost = base transfer cost + coupled fault score of the edge's
    head node: entering a faulty neighborhood is what costs."""
    if f.values.shape != (g.n_nodes,):
        raise FaultError(
            f"fault scores cover {f.values.shape[0]} nodes, graph has {g.n_nodes}")
    values = g.base_cost + w.coupling * f.values[g.edge_target]
    return RewardMatrix(f.index, values)


# -- leak CSV ------------------------------------------------------------

LEAK_CSV_HEADER = ["seq", "node_id", "repair_hours", "cost"]


def read_leaks_csv(path: str | Path) -> list[LeakEvent]:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != LEAK_CSV_HEADER:
            raise FaultError(f"bad leak CSV header in {path}: {header}")
        events = []
        for row in reader:
            if len(row) != 4:
                raise FaultError(f"bad leak CSV row in {path}: {row}")
            events.append(LeakEvent(int(row[0]), int(row[1]),
                                    float(row[2]), float(row[3])))
    return events


def write_leaks_csv(events: list[LeakEvent], path: str | Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(LEAK_CSV_HEADER)
        for ev in events:
            writer.writerow([ev.seq, ev.node, repr(ev.repair_hours), repr(ev.cost)])
