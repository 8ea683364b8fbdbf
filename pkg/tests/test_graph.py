import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from halosim.errors import InputError, ParseError
from halosim.graph import (
    build_graph,
    gen_planted_partition_graph,
    gen_random_graph,
    load_edge_list,
    planted_blocks,
    save_edge_list,
)


def test_single_undirected_edge_is_symmetric():
    g = build_graph([(0, 1)], 2)
    assert g.neighbors(0).tolist() == [1]
    assert g.neighbors(1).tolist() == [0]
    assert g.num_edges == 2


def test_directed_duplicates_collapse():
    g = build_graph([(0, 1), (1, 0), (0, 1)], 2, undirected=False)
    assert g.neighbors(0).tolist() == [1]
    assert g.neighbors(1).tolist() == [0]
    assert g.num_edges == 2


def test_directed_rows_hold_in_neighbors():
    g = build_graph([(0, 1), (0, 2)], 3, undirected=False)
    assert g.neighbors(0).tolist() == []
    assert g.neighbors(1).tolist() == [0]
    assert g.neighbors(2).tolist() == [0]


def test_path_degrees(path4):
    assert path4.degrees().tolist() == [1, 2, 2, 1]
    assert path4.stats().avg_degree == 1.5


def test_self_loops_dropped_and_bad_ids_rejected():
    g = build_graph([(0, 0), (0, 1)], 2)
    assert g.num_edges == 2
    with pytest.raises(InputError):
        build_graph([(0, 5)], 2)
    with pytest.raises(InputError):
        build_graph([], 0)


def test_gen_random_tiny_and_degree():
    g = gen_random_graph(1, 0, 3)
    assert g.num_vertices == 1 and g.num_edges == 0
    g = gen_random_graph(1000, 10, 7)
    assert 9.5 <= g.stats().avg_degree <= 10.5


def test_gen_random_deterministic():
    a = gen_random_graph(500, 6, 42)
    b = gen_random_graph(500, 6, 42)
    c = gen_random_graph(500, 6, 43)
    assert a.same_as(b)
    assert not a.same_as(c)


def test_planted_extremes():
    g = gen_planted_partition_graph(4, 2, 1.0, 0.0, 1)
    assert sorted(map(tuple, zip(*g.edge_array()))) == [(0, 1), (1, 0), (2, 3), (3, 2)]
    single = gen_planted_partition_graph(50, 1, 0.2, 0.0, 1)
    assert single.num_edges > 0


def test_planted_block_structure():
    n, parts = 200, 4
    g = gen_planted_partition_graph(n, parts, 0.2, 0.01, 5)
    blocks = planted_blocks(n, parts)
    rows, cols = g.edge_array()
    same = blocks[rows] == blocks[cols]
    within_pairs = parts * (n // parts) * (n // parts - 1)
    cross_pairs = n * (n - 1) - within_pairs
    assert same.sum() / within_pairs > (~same).sum() / cross_pairs


def test_load_path_and_comments(tmp_path):
    f = tmp_path / "g.el"
    f.write_text("0 1\n1 2\n")
    g = load_edge_list(f)
    assert g.num_vertices == 3 and g.degrees().tolist() == [1, 2, 1]
    f.write_text("# a comment\n0 1\n\n# another\n1 2\n")
    assert load_edge_list(f).same_as(g)


def test_parse_error_carries_line(tmp_path):
    f = tmp_path / "bad.el"
    f.write_text("0 1\n1 x\n")
    with pytest.raises(ParseError) as err:
        load_edge_list(f)
    assert err.value.lineno == 2


def test_round_trip(tmp_path):
    g = gen_random_graph(300, 5, 9)
    save_edge_list(g, tmp_path / "g.el")
    assert load_edge_list(tmp_path / "g.el").same_as(g)


def test_round_trip_keeps_isolated_tail(tmp_path):
    g = build_graph([(0, 1)], 5)
    save_edge_list(g, tmp_path / "g.el")
    assert load_edge_list(tmp_path / "g.el").num_vertices == 5


edges = st.lists(st.tuples(st.integers(0, 29), st.integers(0, 29)), max_size=120)


@settings(max_examples=60, deadline=None)
@given(edges, st.booleans())
def test_csr_invariants(edge_list, undirected):
    g = build_graph(edge_list, 30, undirected=undirected)
    assert g.degrees().sum() == g.num_edges
    for v in range(30):
        nb = g.neighbors(v)
        assert np.all(np.diff(nb) > 0)
        assert v not in nb
    rows, cols = g.edge_array()
    pairs = set(zip(rows.tolist(), cols.tolist()))
    if undirected:
        assert all((c, r) in pairs for r, c in pairs)
    want = set()
    for u, v in edge_list:
        if u != v:
            want.add((v, u))
            if undirected:
                want.add((u, v))
    assert pairs == want
