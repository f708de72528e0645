import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from aquaroute.faults import (FaultError, FaultScores, FaultWeights, LeakEvent,
                              WindowBatch, build_reward_matrix, chunk_events,
                              initial_scores, read_leaks_csv,
                              update_fault_scores, write_leaks_csv)
from aquaroute.oracles import dijkstra_oracle
from aquaroute.topology import grid_graph, load_topology
from conftest import diamond_graph


def make_events(n, node=1):
    return [LeakEvent(i + 1, node, 1.0, 10.0) for i in range(n)]


def test_chunk_paper_counts():
    batches = chunk_events(make_events(1816), 30)
    assert len(batches) == 61
    assert all(not b.is_partial and len(b.events) == 30 for b in batches[:60])
    assert batches[60].is_partial and len(batches[60].events) == 16
    assert [b.index for b in batches] == list(range(1, 62))


def test_chunk_empty_and_exact():
    assert chunk_events([], 30) == []
    batches = chunk_events(make_events(30), 30)
    assert len(batches) == 1 and not batches[0].is_partial


def test_chunk_bad_window_size():
    with pytest.raises(FaultError, match="window size"):
        chunk_events(make_events(3), 0)


def test_chunk_unordered_events():
    events = [LeakEvent(2, 1, 0, 0), LeakEvent(1, 1, 0, 0)]
    with pytest.raises(FaultError, match="out of order"):
        chunk_events(events, 10)


def test_update_hand_case():
    g = diamond_graph()
    w = FaultWeights(w_count=1.0, w_time=0.1, w_cost=0.01, discount=0.5)
    prev = FaultScores(0, np.array([0.0, 10.0, 0.0, 0.0]))
    batch = WindowBatch(1, (LeakEvent(1, 2, 2.0, 100.0),), False)
    scores = update_fault_scores(prev, batch, w, g)
    # 0.5*10 + (1 + 0.1*2 + 0.01*100) = 5 + 1 + 0.2 + 1 = 7.2
    assert scores.score(2) == pytest.approx(7.2, abs=1e-12)
    assert scores.score(1) == 0.0


def test_update_empty_batch_fixed_point():
    g = diamond_graph()
    w = FaultWeights()
    scores = update_fault_scores(initial_scores(g), WindowBatch(1, (), False), w, g)
    assert np.all(scores.values == 0.0)


def test_update_decays_absent_nodes():
    g = diamond_graph()
    w = FaultWeights(discount=0.25)
    prev = FaultScores(3, np.array([4.0, 8.0, 0.0, 1.0]))
    scores = update_fault_scores(prev, WindowBatch(4, (), False), w, g)
    assert np.allclose(scores.values, [1.0, 2.0, 0.0, 0.25])


def test_update_index_mismatch():
    g = diamond_graph()
    with pytest.raises(FaultError, match="window index mismatch"):
        update_fault_scores(initial_scores(g), WindowBatch(2, (), False),
                            FaultWeights(), g)


def test_update_unknown_node():
    g = diamond_graph()
    batch = WindowBatch(1, (LeakEvent(1, 99, 1.0, 1.0),), False)
    with pytest.raises(FaultError, match="unknown node 99"):
        update_fault_scores(initial_scores(g), batch, FaultWeights(), g)


@settings(max_examples=60, deadline=None)
@given(st.lists(st.lists(st.tuples(st.integers(1, 4), st.floats(0, 50),
                                   st.floats(0, 1000)),
                         max_size=8),
                min_size=1, max_size=10),
       st.floats(0.05, 0.95))
def test_recursion_matches_discounted_sum(history, discount):
    """k applications of the recursion equal the explicit sum of
    discount^(k-t) * aggregate(t)."""
    g = diamond_graph()
    w = FaultWeights(discount=discount)
    scores = initial_scores(g)
    seq = 0
    batches = []
    for k, spec in enumerate(history, start=1):
        events = []
        for node, hours, cost in spec:
            seq += 1
            events.append(LeakEvent(seq, node, hours, cost))
        batch = WindowBatch(k, tuple(events), False)
        batches.append(batch)
        scores = update_fault_scores(scores, batch, w, g)

    k = len(batches)
    expected = np.zeros(g.n_nodes)
    for t, batch in enumerate(batches, start=1):
        agg = np.zeros(g.n_nodes)
        for ev in batch.events:
            agg[ev.node - 1] += (w.w_count + w.w_time * ev.repair_hours
                                 + w.w_cost * ev.cost)
        expected += discount ** (k - t) * agg
    assert np.allclose(scores.values, expected, atol=1e-9, rtol=0)
    assert np.all(scores.values >= 0)


def test_reward_matrix_zero_faults_is_base():
    g = diamond_graph(c12=2.0)
    ra = build_reward_matrix(g, initial_scores(g), FaultWeights())
    assert np.array_equal(ra.values, g.base_cost)


def test_reward_matrix_head_node_cost():
    g = diamond_graph()
    f = FaultScores(1, np.array([0.0, 7.2, 0.0, 0.0]))
    ra = build_reward_matrix(g, f, FaultWeights(coupling=1.0))
    assert ra.values[g.edge_id(1, 2)] == pytest.approx(8.2)
    assert ra.values[g.edge_id(1, 3)] == 1.0
    assert ra.values[g.edge_id(2, 4)] == 1.0


def test_reward_matrix_uniform_shift_preserves_path():
    g = grid_graph(3, 3)
    w = FaultWeights(coupling=1.0)
    flat = build_reward_matrix(g, initial_scores(g), w)
    shifted = build_reward_matrix(g, FaultScores(0, np.full(9, 3.5)), w)
    base_path, _ = dijkstra_oracle(g, flat.values, 1, 9)
    shift_path, _ = dijkstra_oracle(g, shifted.values, 1, 9)
    assert base_path == shift_path


def test_reward_matrix_dominates_base():
    g = grid_graph(3, 3)
    rng = np.random.default_rng(0)
    f = FaultScores(1, rng.uniform(0, 5, 9))
    ra = build_reward_matrix(g, f, FaultWeights(coupling=0.7))
    assert np.all(ra.values >= g.base_cost)


def test_reward_matrix_score_coverage():
    g = diamond_graph()
    with pytest.raises(FaultError, match="cover"):
        build_reward_matrix(g, FaultScores(1, np.zeros(2)), FaultWeights())


def test_weights_validation():
    with pytest.raises(FaultError):
        FaultWeights(discount=1.0)
    with pytest.raises(FaultError):
        FaultWeights(w_count=-1)


def test_leak_csv_round_trip(tmp_path):
    events = [LeakEvent(1, 3, 2.25, 100.5), LeakEvent(2, 1, 0.0, 0.0)]
    path = tmp_path / "leaks.csv"
    write_leaks_csv(events, path)
    header = path.read_text().splitlines()[0]
    assert header == "seq,node_id,repair_hours,cost"
    assert read_leaks_csv(path) == events


def test_leak_csv_bad_header(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("a,b,c,d\n1,2,3,4\n")
    with pytest.raises(FaultError, match="header"):
        read_leaks_csv(path)


def test_negative_event_values_rejected():
    with pytest.raises(FaultError, match="negative repair time"):
        LeakEvent(1, 1, -1.0, 0.0)
    with pytest.raises(FaultError, match="negative cost"):
        LeakEvent(1, 1, 0.0, -2.0)
