import numpy as np
import pytest

from aquaroute.topology import (NetworkGraph, Node, load_topology,
                                synthetic_city_topology, write_topology)


def diamond_graph(c12=1.0, c13=1.0, c24=1.0, c34=1.0) -> NetworkGraph:
    """Directed diamond 1->{2,3}->4; node 4 is a sink."""
    return load_topology({
        "nodes": [{"id": i, "name": f"n{i}", "x": float(i), "y": 0.0}
                  for i in range(1, 5)],
        "edges": [
            {"from": 1, "to": 2, "cost": c12},
            {"from": 1, "to": 3, "cost": c13},
            {"from": 2, "to": 4, "cost": c24},
            {"from": 3, "to": 4, "cost": c34},
        ],
    })


def random_border_graph(rng: np.random.Generator, n_nodes: int,
                        extra_borders: int = 0,
                        cost_range=(0.5, 3.0),
                        round_costs: bool = True) -> NetworkGraph:
    """Connected undirected-border graph: random spanning tree plus extras.

    round_costs=False keeps raw float costs so distinct paths almost never
    tie exactly (useful for exact-cost oracle comparisons).
    """
    order = rng.permutation(n_nodes) + 1
    pairs = set()
    for i in range(1, n_nodes):
        a = int(order[i])
        b = int(order[rng.integers(0, i)])
        pairs.add((min(a, b), max(a, b)))
    for _ in range(extra_borders):
        a, b = rng.integers(1, n_nodes + 1, size=2)
        if a != b:
            pairs.add((min(int(a), int(b)), max(int(a), int(b))))
    borders = []
    for a, b in sorted(pairs):
        cost = rng.uniform(*cost_range)
        borders.append({"a": a, "b": b,
                        "cost": float(np.round(cost, 3)) if round_costs
                        else float(cost)})
    nodes = [{"id": i, "name": f"n{i}", "x": float(i), "y": 0.0}
             for i in range(1, n_nodes + 1)]
    return load_topology({"nodes": nodes, "borders": borders})


@pytest.fixture
def diamond():
    return diamond_graph()


@pytest.fixture(scope="session")
def city_topology_path(tmp_path_factory):
    path = tmp_path_factory.mktemp("topo") / "city119.json"
    write_topology(synthetic_city_topology(119, seed=3), path)
    return path
