"""Turn a trained predicted-cost table into decisions: the proposed
source-to-destination path, the isolation recommendation, and the
next-window leak prediction.

All functions are read-only over snapshots and safe to run while training
continues elsewhere.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .faults import FaultScores
from .topology import NetworkGraph


@dataclass(frozen=True)
class Path:
    nodes: tuple[int, ...]
    total_cost: float  # sum of the window's shaped costs along the edges


@dataclass(frozen=True)
class LabelCounts:
    leaks: int
    dangerous: int
    safe: int


@dataclass(frozen=True)
class WindowResult:
    index: int
    path: Path | None  # None = infeasible
    isolation: frozenset[int]
    predicted_leaks: frozenset[int]
    qopt_delta: float | None  # None on the first window
    qopt_delta_max: float | None
    path_cost: float | None
    label_counts: LabelCounts
    dangerous: frozenset[int]
    safe: frozenset[int]
    leaky: frozenset[int]
    threshold: float
    steps: int
    trapped: int
    truncated: int


def path_cost(g: NetworkGraph, costs: np.ndarray, nodes) -> float:
    total = 0.0
    for i, j in zip(nodes, nodes[1:]):
        total += float(costs[g.edge_id(i, j)])
    return total


def extract_path(g: NetworkGraph, qopt: np.ndarray, source: int, dest: int,
                 forbidden: frozenset[int] = frozenset(),
                 rewards: np.ndarray | None = None) -> Path | None:
    """Greedy walk over the predicted-cost table with backtracking.

    From each node take the unvisited, non-forbidden neighbor with the
    smallest predicted cost (ties to the smallest node id); dead ends
    backtrack and stay excluded. Returns None only when the source runs
    out of candidates. Cost is summed from ``rewards`` when given, else
    from the table used for the walk.
    """
    g._check_node(source)
    g._check_node(dest)

    def candidates(node: int) -> list[int]:
        row = []
        for e in g.out_edges(node):
            tgt = int(g.edge_target[e]) + 1
            if tgt not in visited and tgt not in forbidden:
                row.append((float(qopt[e]), tgt))
        row.sort()
        return [tgt for _, tgt in row]

    visited = {source}
    path = [source]
    frames = [candidates(source)]
    while path[-1] != dest:
        frame = frames[-1]
        if not frame:
            path.pop()
            frames.pop()
            if not path:
                return None
            continue
        nxt = frame.pop(0)
        if nxt in visited:
            continue
        visited.add(nxt)
        path.append(nxt)
        frames.append(candidates(nxt) if nxt != dest else [])

    costs = rewards if rewards is not None else qopt
    return Path(tuple(path), path_cost(g, costs, path))


def isolation_set(path: Path | None, leaky: frozenset[int],
                  dangerous: frozenset[int]) -> frozenset[int]:
    """Leaky nodes off the proposed path plus every dangerous node (which
    is never on the path)."""
    on_path = set(path.nodes) if path is not None else set()
    return frozenset((set(leaky) | set(dangerous)) - on_path)


def predict_leaks(f: FaultScores, tau: float) -> frozenset[int]:
    """Nodes whose fault score meets the threshold; nodes with no history
    (score zero) are never predicted."""
    if tau < 0:
        raise ValueError("threshold must be >= 0")
    return frozenset(
        int(i) + 1 for i in np.flatnonzero((f.values >= tau) & (f.values > 0)))


def default_threshold(f: FaultScores) -> float:
    """75th percentile of the nonzero scores; +inf when nothing leaked yet."""
    nonzero = f.values[f.values > 0]
    if nonzero.size == 0:
        return float("inf")
    return float(np.percentile(nonzero, 75))
