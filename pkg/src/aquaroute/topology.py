"""Directed network graph of neighborhoods connected by pipelines.

Nodes are the learner's states, directed edges its actions. Graphs are
immutable after construction and safe to share across sessions.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np


class TopologyError(ValueError):
    """Raised when a topology document or graph construction is invalid."""


@dataclass(frozen=True)
class Node:
    id: int  # 1-based, contiguous
    name: str
    x: float
    y: float


class NetworkGraph:
    """Directed graph with per-edge base transfer costs, stored in CSR form.

    Edge ids are dense 0..E-1, grouped by source node in document order;
    all learner tables are indexed by edge id.
    """

    def __init__(self, nodes: list[Node], edges: list[tuple[int, int, float]]):
        self._validate_nodes(nodes)
        self.nodes = list(nodes)
        self.n_nodes = len(nodes)

        per_source: list[list[tuple[int, float]]] = [[] for _ in range(self.n_nodes)]
        seen: set[tuple[int, int]] = set()
        for i, j, cost in edges:
            if not (1 <= i <= self.n_nodes):
                raise TopologyError(f"edge ({i}, {j}) references unknown node {i}")
            if not (1 <= j <= self.n_nodes):
                raise TopologyError(f"edge ({i}, {j}) references unknown node {j}")
            if i == j:
                raise TopologyError(f"self-loop ({i}, {i})")
            if cost < 0:
                raise TopologyError(f"negative base cost on edge ({i}, {j}): {cost}")
            if (i, j) in seen:
                raise TopologyError(f"duplicate edge ({i}, {j})")
            seen.add((i, j))
            per_source[i - 1].append((j - 1, float(cost)))

        self.n_edges = len(seen)
        self.indptr = np.zeros(self.n_nodes + 1, dtype=np.int64)
        self.edge_target = np.zeros(self.n_edges, dtype=np.int64)
        self.base_cost = np.zeros(self.n_edges, dtype=np.float64)
        pos = 0
        for i0, row in enumerate(per_source):
            self.indptr[i0] = pos
            for j0, cost in row:
                self.edge_target[pos] = j0
                self.base_cost[pos] = cost
                pos += 1
        self.indptr[self.n_nodes] = pos
        self._edge_index = {
            (i0 + 1, int(self.edge_target[e]) + 1): e
            for i0 in range(self.n_nodes)
            for e in range(self.indptr[i0], self.indptr[i0 + 1])
        }

    @staticmethod
    def _validate_nodes(nodes: list[Node]) -> None:
        if len(nodes) < 2:
            raise TopologyError("topology needs at least 2 nodes")
        ids = [n.id for n in nodes]
        seen: set[int] = set()
        for nid in ids:
            if nid in seen:
                raise TopologyError(f"duplicate node id {nid}")
            seen.add(nid)
        if seen != set(range(1, len(nodes) + 1)):
            raise TopologyError(
                f"node ids must form the contiguous range 1..{len(nodes)}"
            )

    # -- queries ---------------------------------------------------------

    def node(self, i: int) -> Node:
        self._check_node(i)
        for n in self.nodes:
            if n.id == i:
                return n
        raise AssertionError("unreachable")

    def neighbors(self, i: int) -> list[int]:
        """Out-neighbors of node i in stored (document) order, 1-based."""
        self._check_node(i)
        lo, hi = self.indptr[i - 1], self.indptr[i]
        return [int(t) + 1 for t in self.edge_target[lo:hi]]

    def out_edges(self, i: int) -> range:
        self._check_node(i)
        return range(int(self.indptr[i - 1]), int(self.indptr[i]))

    def edge_id(self, i: int, j: int) -> int:
        eid = self._edge_index.get((i, j))
        if eid is None:
            raise TopologyError(f"no edge ({i}, {j}) in graph")
        return eid

    def has_edge(self, i: int, j: int) -> bool:
        return (i, j) in self._edge_index

    def edges(self) -> list[tuple[int, int]]:
        """All directed edges (1-based pairs) in edge-id order."""
        out = []
        for i0 in range(self.n_nodes):
            for e in range(self.indptr[i0], self.indptr[i0 + 1]):
                out.append((i0 + 1, int(self.edge_target[e]) + 1))
        return out

    def _check_node(self, i: int) -> None:
        if not (isinstance(i, (int, np.integer)) and 1 <= i <= self.n_nodes):
            raise TopologyError(f"unknown node id {i}")


# -- document loading ----------------------------------------------------

_NODE_FIELDS = {"id", "name", "x", "y"}
_BORDER_FIELDS = {"a", "b", "cost"}
_EDGE_FIELDS = {"from", "to", "cost"}


def load_topology(doc: dict) -> NetworkGraph:
    """Build a graph from a parsed topology document.

    Border pairs expand to two directed edges sharing the listed cost;
    the ``edges`` form gives per-direction costs. Unknown fields are
    rejected.
    """
    if not isinstance(doc, dict):
        raise TopologyError("topology document must be a JSON object")
    unknown = set(doc) - {"nodes", "borders", "edges"}
    if unknown:
        raise TopologyError(f"unknown topology fields: {sorted(unknown)}")
    if "nodes" not in doc:
        raise TopologyError("topology document missing 'nodes'")
    if ("borders" in doc) == ("edges" in doc):
        raise TopologyError("topology document needs exactly one of 'borders' or 'edges'")

    nodes = []
    for entry in doc["nodes"]:
        if not isinstance(entry, dict):
            raise TopologyError(f"node entry is not an object: {entry!r}")
        extra = set(entry) - _NODE_FIELDS
        if extra:
            raise TopologyError(f"unknown node fields {sorted(extra)} in {entry!r}")
        missing = _NODE_FIELDS - set(entry)
        if missing:
            raise TopologyError(f"node entry missing {sorted(missing)}: {entry!r}")
        nodes.append(Node(int(entry["id"]), str(entry["name"]),
                          float(entry["x"]), float(entry["y"])))

    edges: list[tuple[int, int, float]] = []
    if "borders" in doc:
        for entry in doc["borders"]:
            extra = set(entry) - _BORDER_FIELDS
            if extra:
                raise TopologyError(f"unknown border fields {sorted(extra)} in {entry!r}")
            a, b, cost = int(entry["a"]), int(entry["b"]), float(entry["cost"])
            edges.append((a, b, cost))
            edges.append((b, a, cost))
    else:
        for entry in doc["edges"]:
            extra = set(entry) - _EDGE_FIELDS
            if extra:
                raise TopologyError(f"unknown edge fields {sorted(extra)} in {entry!r}")
            edges.append((int(entry["from"]), int(entry["to"]), float(entry["cost"])))

    return NetworkGraph(nodes, edges)


def read_topology(path: str | Path) -> NetworkGraph:
    with open(path, encoding="utf-8") as fh:
        return load_topology(json.load(fh))


def write_topology(doc: dict, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2)
        fh.write("\n")


def validate_route_endpoints(g: NetworkGraph, source: int, dest: int) -> str | None:
    """Check a source/destination pair; returns None if ok, else a diagnostic."""
    if not (isinstance(source, (int, np.integer)) and 1 <= source <= g.n_nodes):
        return f"unknown source node {source}"
    if not (isinstance(dest, (int, np.integer)) and 1 <= dest <= g.n_nodes):
        return f"unknown destination node {dest}"
    if source == dest:
        return "endpoints equal"
    # plain graph search for reachability
    frontier = [source]
    seen = {source}
    while frontier:
        cur = frontier.pop()
        for nxt in g.neighbors(cur):
            if nxt == dest:
                return None
            if nxt not in seen:
                seen.add(nxt)
                frontier.append(nxt)
    return f"destination {dest} unreachable from source {source}"


# -- constructors for tests and demos ------------------------------------

def grid_topology(rows: int, cols: int, base_cost: float = 1.0) -> dict:
    """Rows x cols 4-neighbor grid document with unit costs, ids row-major."""
    if rows * cols < 2:
        raise TopologyError("grid needs at least 2 nodes")
    nodes = []
    borders = []
    for r in range(rows):
        for c in range(cols):
            nid = r * cols + c + 1
            nodes.append({"id": nid, "name": f"n{nid}", "x": float(c), "y": float(r)})
            if c + 1 < cols:
                borders.append({"a": nid, "b": nid + 1, "cost": base_cost})
            if r + 1 < rows:
                borders.append({"a": nid, "b": nid + cols, "cost": base_cost})
    return {"nodes": nodes, "borders": borders}


def grid_graph(rows: int, cols: int, base_cost: float = 1.0) -> NetworkGraph:
    return load_topology(grid_topology(rows, cols, base_cost))


def synthetic_city_topology(n_nodes: int, seed: int = 0,
                            jitter: float = 0.35) -> dict:
    """Planar-ish city document: jittered grid points joined by a Delaunay
    triangulation, border costs proportional to distance.

    Deterministic for a given (n_nodes, seed); used for desk-scale stand-ins
    of the real 119-neighborhood map, which is not published.
    """
    from scipy.spatial import Delaunay

    if n_nodes < 3:
        raise TopologyError("city topology needs at least 3 nodes")
    rng = np.random.default_rng(seed)
    cols = int(math.ceil(math.sqrt(n_nodes)))
    pts = np.zeros((n_nodes, 2))
    for i in range(n_nodes):
        r, c = divmod(i, cols)
        pts[i] = (c + rng.uniform(-jitter, jitter), r + rng.uniform(-jitter, jitter))

    tri = Delaunay(pts)
    pairs: set[tuple[int, int]] = set()
    for simplex in tri.simplices:
        for u, v in ((0, 1), (1, 2), (0, 2)):
            a, b = int(simplex[u]), int(simplex[v])
            pairs.add((min(a, b), max(a, b)))

    nodes = [{"id": i + 1, "name": f"n{i + 1}",
              "x": float(pts[i, 0]), "y": float(pts[i, 1])}
             for i in range(n_nodes)]
    borders = [{"a": a + 1, "b": b + 1,
                "cost": round(float(np.hypot(*(pts[a] - pts[b]))), 6)}
               for a, b in sorted(pairs)]
    return {"nodes": nodes, "borders": borders}
