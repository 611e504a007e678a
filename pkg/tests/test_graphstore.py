import numpy as np
import pytest
from hypothesis import given, strategies as st

from conftest import gnp, pair_set
from graphcomplete.graphstore import (FeatureMatrix, Graph, GraphError, add_edges, induced_subgraph,
                                      load_features, load_graph, save_features, save_graph, stats,
                                      stats_from_counts)

pairs_strategy = st.integers(2, 12).flatmap(
    lambda n: st.tuples(st.just(n), st.lists(st.tuples(st.integers(0, n - 1), st.integers(0, n - 1))
                                             .filter(lambda p: p[0] != p[1]), max_size=40)))


def test_smallest_symmetric_graph():
    g = Graph(3, [(0, 1), (1, 0)])
    assert g.num_edge_records == 2
    assert g.degrees().tolist() == [1, 1, 0]


def test_single_row_is_symmetrized():
    g = Graph(2, [(0, 1)])
    assert g.num_edge_records == 2
    assert g.has_edge(1, 0) and g.has_edge(0, 1)


def test_duplicates_dropped():
    assert Graph(2, [(0, 1), (1, 0), (0, 1)]).num_edge_records == 2


@given(pairs_strategy)
def test_record_invariants(data):
    n, pairs = data
    g = Graph(n, pairs)
    rec = g.edge_records
    as_set = {tuple(r) for r in rec.tolist()}
    assert len(as_set) == len(rec)
    assert all((v, u) in as_set for u, v in as_set)
    assert all(u != v for u, v in as_set)
    assert g.num_edge_records % 2 == 0
    assert np.array_equal(g.degrees(), np.bincount(rec[:, 0], minlength=n))
    assert pair_set(g.pairs()) == pair_set(pairs)
    for v in range(n):
        assert sorted(g.neighbors(v).tolist()) == sorted(u for a, u in as_set if a == v)


def test_out_of_range_and_self_loop_rejected():
    with pytest.raises(GraphError, match="index 1"):
        Graph(3, [(0, 1), (0, 3)])
    with pytest.raises(GraphError, match="index 0"):
        Graph(3, [(2, 2)])


def test_load_graph_errors_name_the_line(tmp_path):
    p = tmp_path / "e.csv"
    p.write_text("0,1\n1,x\n")
    with pytest.raises(GraphError, match=r"e.csv:2"):
        load_graph(p, 3)
    p.write_text("0,1\n2,5\n")
    with pytest.raises(GraphError, match=r"e.csv:2"):
        load_graph(p, 3)
    p.write_text("# header\n0 1\n1 1\n")
    with pytest.raises(GraphError, match=r"e.csv:3"):
        load_graph(p, 3)


@given(pairs_strategy)
def test_save_load_round_trip(tmp_path_factory, data):
    n, pairs = data
    g = Graph(n, pairs)
    path = tmp_path_factory.mktemp("rt") / "edges.csv"
    save_graph(g, path)
    assert load_graph(path, n) == g


def test_features_csv(tmp_path):
    p = tmp_path / "f.csv"
    p.write_text("1,0\n0,1\n")
    assert load_features(p, 2, 2).values.tolist() == [[1, 0], [0, 1]]


def test_features_binary_matches_csv(tmp_path):
    X = FeatureMatrix(np.array([[0.5, -1.25], [3.0, 0.0]]))
    save_features(X, tmp_path / "f.bin", binary=True)
    save_features(X, tmp_path / "f.csv")
    a = load_features(tmp_path / "f.bin", 2, 2, binary=True)
    b = load_features(tmp_path / "f.csv", 2, 2)
    assert np.array_equal(a.values, b.values)
    assert (tmp_path / "f.bin").stat().st_size == 16


def test_features_reject_nan_and_bad_shape(tmp_path):
    p = tmp_path / "f.csv"
    p.write_text("1,nan\n0,1\n")
    with pytest.raises(GraphError, match="f.csv"):
        load_features(p, 2, 2)
    p.write_text("1,0\n0,1\n")
    with pytest.raises(GraphError, match="expected 3x2"):
        load_features(p, 3, 2)


@pytest.mark.parametrize("n, records, zero, sparsity, pct", [
    (13752, 491722, 281, 99.73, 2.04),
    (22912, 290514, 5420, 99.94, 23.65),
])
def test_stats_reference_columns(n, records, zero, sparsity, pct):
    s = stats_from_counts(n, records, zero)
    assert abs(s.sparsity - sparsity) <= 0.01
    assert abs(s.pct_zero_degree - pct) <= 0.01


def test_stats_empty_graph():
    s = stats(Graph(5))
    assert s.sparsity == 100.0 and s.pct_zero_degree == 100.0
    assert s.as_dict()["sparsity"] == 100.0


def test_stats_formula_on_graph(triangle):
    s = stats(triangle)
    assert s.num_edge_records == 6
    assert s.sparsity == pytest.approx(100 * (1 - 6 / 9))
    assert s.num_zero_degree_nodes == 0


def test_add_edges_examples():
    g = add_edges(Graph(3, [(0, 1)]), [(1, 2)])
    assert pair_set(g.pairs()) == {(0, 1), (1, 2)}
    assert g.num_edge_records == 4
    assert add_edges(g, [(2, 1)]).num_edge_records == 4


def test_add_edges_union_oracle():
    rng = np.random.default_rng(0)
    g = gnp(50, 0.05, 1)
    extra = rng.integers(0, 50, (100, 2))
    extra = extra[extra[:, 0] != extra[:, 1]]
    g2 = add_edges(g, extra)
    assert g2.num_edge_records == 2 * len(pair_set(g.pairs()) | pair_set(extra))


@given(pairs_strategy, st.data())
def test_add_edges_stats_direction(data, draw):
    n, pairs = data
    g = Graph(n, pairs[: len(pairs) // 2])
    g2 = add_edges(g, pairs[len(pairs) // 2:])
    assert stats(g2).num_edge_records >= stats(g).num_edge_records
    assert stats(g2).num_zero_degree_nodes <= stats(g).num_zero_degree_nodes


def test_add_edges_rejects_bad_pairs():
    with pytest.raises(GraphError, match=r"\(1, 1\)"):
        add_edges(Graph(3), [(0, 1), (1, 1)])


def test_induced_subgraph_examples(triangle):
    sub, old_to_new = induced_subgraph(triangle, [0, 1])
    assert sub.num_nodes == 2 and pair_set(sub.pairs()) == {(0, 1)}
    assert old_to_new.tolist() == [0, 1, -1]
    full, ident = induced_subgraph(triangle, [0, 1, 2])
    assert full == triangle and ident.tolist() == [0, 1, 2]


def test_induced_subgraph_filter_oracle():
    g = gnp(20, 0.2, 3)
    keep = np.sort(np.random.default_rng(4).choice(20, 10, replace=False))
    sub, old_to_new = induced_subgraph(g, keep)
    expect = {(int(old_to_new[u]), int(old_to_new[v])) for u, v in pair_set(g.pairs())
              if u in set(keep.tolist()) and v in set(keep.tolist())}
    assert pair_set(sub.pairs()) == expect
