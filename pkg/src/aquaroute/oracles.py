"""Independent brute-force references used by the test suites and the
acceptance gate: exact shortest paths, Bellman cost-to-go, reachability,
and simple-path enumeration. Kept apart from the learner on purpose.
"""
from __future__ import annotations

import heapq

import numpy as np

from .topology import NetworkGraph


def dijkstra_oracle(g: NetworkGraph, costs: np.ndarray, source: int, dest: int,
                    forbidden: frozenset[int] = frozenset()):
    """Exact cheapest path avoiding forbidden nodes; ties broken by node
    id via the heap order. Returns (nodes, cost) or None if unreachable."""
    if np.any(costs < 0):
        raise ValueError("edge costs must be nonnegative")
    if source in forbidden or dest in forbidden:
        return None
    dist = {source: 0.0}
    pred: dict[int, int] = {}
    heap = [(0.0, source)]
    done: set[int] = set()
    while heap:
        d, u = heapq.heappop(heap)
        if u in done:
            continue
        done.add(u)
        if u == dest:
            nodes = [dest]
            while nodes[-1] != source:
                nodes.append(pred[nodes[-1]])
            nodes.reverse()
            return nodes, d
        for e in g.out_edges(u):
            v = int(g.edge_target[e]) + 1
            if v in forbidden or v in done:
                continue
            nd = d + float(costs[e])
            if nd < dist.get(v, float("inf")):
                dist[v] = nd
                pred[v] = u
                heapq.heappush(heap, (nd, v))
    return None


def bellman_cost_to_go(g: NetworkGraph, costs: np.ndarray, goal: int) -> np.ndarray:
    """Exact cost-to-go to the goal by Bellman relaxation sweeps; the goal
    is absorbing at zero. Unreachable nodes stay at +inf."""
    dist = np.full(g.n_nodes, np.inf)
    dist[goal - 1] = 0.0
    for _ in range(g.n_nodes):
        changed = False
        for i0 in range(g.n_nodes):
            if i0 == goal - 1:
                continue
            for e in range(g.indptr[i0], g.indptr[i0 + 1]):
                j0 = int(g.edge_target[e])
                nd = float(costs[e]) + dist[j0]
                if nd < dist[i0]:
                    dist[i0] = nd
                    changed = True
        if not changed:
            break
    return dist


def bfs_reachable(g: NetworkGraph, source: int) -> set[int]:
    seen = {source}
    frontier = [source]
    while frontier:
        nxt_frontier = []
        for u in frontier:
            for v in g.neighbors(u):
                if v not in seen:
                    seen.add(v)
                    nxt_frontier.append(v)
        frontier = nxt_frontier
    return seen


def enumerate_simple_paths(g: NetworkGraph, source: int, dest: int,
                           forbidden: frozenset[int] = frozenset(),
                           limit: int = 100000):
    """All simple source->dest paths avoiding forbidden nodes (small
    graphs only)."""
    out: list[list[int]] = []
    stack = [(source, [source])]
    while stack:
        node, path = stack.pop()
        if node == dest:
            out.append(path)
            if len(out) > limit:
                raise RuntimeError("too many simple paths to enumerate")
            continue
        for v in g.neighbors(node):
            if v in forbidden or v in path:
                continue
            stack.append((v, path + [v]))
    return out


def cheapest_simple_path(g: NetworkGraph, costs: np.ndarray, source: int,
                         dest: int, forbidden: frozenset[int] = frozenset()):
    """Minimum-cost simple path by full enumeration; ties to the
    lexicographically smallest node sequence."""
    from .planner import path_cost

    best = None
    for nodes in enumerate_simple_paths(g, source, dest, forbidden):
        c = path_cost(g, costs, nodes)
        key = (c, nodes)
        if best is None or key < best:
            best = key
    if best is None:
        return None
    return best[1], best[0]
