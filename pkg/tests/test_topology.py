import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from aquaroute.oracles import bfs_reachable
from aquaroute.topology import (TopologyError, grid_graph, load_topology,
                                synthetic_city_topology,
                                validate_route_endpoints)
from conftest import diamond_graph, random_border_graph


def two_node_doc(**overrides):
    doc = {
        "nodes": [{"id": 1, "name": "a", "x": 0.0, "y": 0.0},
                  {"id": 2, "name": "b", "x": 1.0, "y": 0.0}],
        "borders": [{"a": 1, "b": 2, "cost": 1.0}],
    }
    doc.update(overrides)
    return doc


def test_border_expands_to_directed_pair():
    g = load_topology(two_node_doc())
    assert g.n_nodes == 2 and g.n_edges == 2
    assert g.neighbors(1) == [2] and g.neighbors(2) == [1]
    assert g.base_cost[g.edge_id(1, 2)] == 1.0
    assert g.base_cost[g.edge_id(2, 1)] == 1.0


def test_city_scale_document_loads():
    g = load_topology(synthetic_city_topology(119, seed=0))
    assert g.n_nodes == 119
    assert validate_route_endpoints(g, 1, 119) is None


def test_self_loop_rejected():
    doc = two_node_doc(borders=[{"a": 1, "b": 1, "cost": 1.0}])
    with pytest.raises(TopologyError, match="self-loop"):
        load_topology(doc)


def test_duplicate_node_id_rejected():
    doc = two_node_doc()
    doc["nodes"].append({"id": 2, "name": "c", "x": 2.0, "y": 0.0})
    with pytest.raises(TopologyError, match="duplicate node id 2"):
        load_topology(doc)


def test_unknown_node_in_edge_rejected():
    doc = two_node_doc(borders=[{"a": 1, "b": 9, "cost": 1.0}])
    with pytest.raises(TopologyError, match="unknown node 9"):
        load_topology(doc)


def test_negative_cost_rejected():
    doc = two_node_doc(borders=[{"a": 1, "b": 2, "cost": -0.5}])
    with pytest.raises(TopologyError, match=r"negative base cost on edge \(1, 2\)"):
        load_topology(doc)


def test_unknown_fields_rejected():
    with pytest.raises(TopologyError, match="unknown topology fields"):
        load_topology(two_node_doc(meta={}))
    doc = two_node_doc()
    doc["nodes"][0]["colour"] = "blue"
    with pytest.raises(TopologyError, match="unknown node fields"):
        load_topology(doc)
    doc = two_node_doc(borders=[{"a": 1, "b": 2, "cost": 1.0, "width": 3}])
    with pytest.raises(TopologyError, match="unknown border fields"):
        load_topology(doc)


def test_exactly_one_edge_section():
    doc = two_node_doc()
    doc["edges"] = [{"from": 1, "to": 2, "cost": 1.0}]
    with pytest.raises(TopologyError, match="exactly one"):
        load_topology(doc)
    del doc["edges"], doc["borders"]
    with pytest.raises(TopologyError, match="exactly one"):
        load_topology(doc)


def test_ids_must_be_contiguous():
    doc = two_node_doc()
    doc["nodes"][1]["id"] = 5
    with pytest.raises(TopologyError, match="contiguous"):
        load_topology(doc)


def test_duplicate_border_rejected():
    doc = two_node_doc(borders=[{"a": 1, "b": 2, "cost": 1.0},
                                {"a": 2, "b": 1, "cost": 2.0}])
    with pytest.raises(TopologyError, match="duplicate edge"):
        load_topology(doc)


def test_neighbors_diamond():
    g = diamond_graph()
    assert g.neighbors(1) == [2, 3]
    assert g.neighbors(4) == []  # sink
    assert g.neighbors(1) == g.neighbors(1)  # stable across calls


def test_neighbors_grid_interior():
    g = grid_graph(5, 5)
    # brute-force adjacency from row-major positions
    interior = 2 * 5 + 2 + 1  # row 2, col 2
    expected = {interior - 5, interior + 5, interior - 1, interior + 1}
    assert set(g.neighbors(interior)) == expected
    assert len(g.neighbors(interior)) == 4


def test_neighbors_unknown_node():
    g = diamond_graph()
    with pytest.raises(TopologyError, match="unknown node id 9"):
        g.neighbors(9)


def test_endpoints_equal_diagnostic():
    g = diamond_graph()
    assert validate_route_endpoints(g, 2, 2) == "endpoints equal"
    assert "unknown source" in validate_route_endpoints(g, 0, 2)
    assert "unknown destination" in validate_route_endpoints(g, 1, 77)


def test_endpoints_unreachable_diagnostic():
    # 4 is a sink, so nothing is reachable from it
    g = diamond_graph()
    assert "unreachable" in validate_route_endpoints(g, 4, 1)
    assert validate_route_endpoints(g, 1, 4) is None


def test_endpoint_validation_agrees_with_bfs():
    rng = np.random.default_rng(1)
    for _ in range(100):
        n = int(rng.integers(2, 12))
        g = random_border_graph(rng, n, extra_borders=int(rng.integers(0, 4)))
        source = int(rng.integers(1, n + 1))
        dest = int(rng.integers(1, n + 1))
        verdict = validate_route_endpoints(g, source, dest)
        if source == dest:
            assert verdict == "endpoints equal"
        else:
            reachable = dest in bfs_reachable(g, source)
            assert (verdict is None) == reachable


@settings(max_examples=50, deadline=None)
@given(st.integers(min_value=2, max_value=20), st.integers(min_value=0, max_value=10),
       st.integers(min_value=0, max_value=2**31 - 1))
def test_border_symmetry_property(n, extra, seed):
    g = random_border_graph(np.random.default_rng(seed), n, extra)
    for i, j in g.edges():
        assert g.has_edge(j, i)
        assert i != j
    for i in range(1, n + 1):
        assert i not in g.neighbors(i)
        assert set(g.neighbors(i)) <= set(range(1, n + 1))


def test_minimum_node_count():
    with pytest.raises(TopologyError, match="at least 2"):
        load_topology({"nodes": [{"id": 1, "name": "a", "x": 0, "y": 0}],
                       "borders": []})
