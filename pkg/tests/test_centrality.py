import math

import networkx as nx
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import make_graph
from insidernet.centrality import ConvergenceError, Measure, closeness, eigenvector, write_ranking_csv
from insidernet.network import CoTradeGraph

PATH = [("a", "b", 0.9), ("b", "c", 0.9)]
STAR = [("h", f"l{i}", 0.9) for i in range(4)]
TRIANGLE = [("a", "b", 0.9), ("b", "c", 0.9), ("a", "c", 0.9)]


def scaled(edges, c):
    return [(u, v, w * c) for u, v, w in edges]


# ---------------------------------------------------------------------------
# closeness


def test_path_closeness():
    s = closeness(make_graph(PATH)).scores
    assert s["b"] == pytest.approx(1.0, abs=1e-12)
    assert s["a"] == s["c"] == pytest.approx(2 / 3, abs=1e-12)


def test_star_closeness():
    s = closeness(make_graph(STAR)).scores
    assert s["h"] == pytest.approx(1.0, abs=1e-12)
    # leaf: distances 1 + 2 + 2 + 2 = 7 over a 5-node component
    assert s["l0"] == pytest.approx(4 / 7, abs=1e-12)


def test_triangle_closeness():
    assert set(closeness(make_graph(TRIANGLE)).scores.values()) == {1.0}


def test_disjoint_pairs_score_equally():
    s = closeness(make_graph([("a", "b", 0.9), ("c", "d", 0.95)])).scores
    assert len(set(s.values())) == 1
    assert s["a"] == pytest.approx(1 / 3, abs=1e-12)


def test_inverse_weight_mode():
    g = make_graph([("a", "b", 0.5), ("b", "c", 1.0)])
    s = closeness(g, "inverse_weight").scores
    # distances from b: 2 and 1
    assert s["b"] == pytest.approx(2 / 3, abs=1e-12)
    with pytest.raises(ValueError):
        closeness(g, "hops")


def random_graph(seed, n=30, p=0.1):
    rng = np.random.default_rng(seed)
    edges = [
        (f"n{i:02d}", f"n{j:02d}", float(rng.uniform(0.81, 1.0)))
        for i in range(n) for j in range(i + 1, n) if rng.random() < p
    ]
    return edges


@given(st.integers(0, 10_000))
def test_closeness_matches_networkx(seed):
    edges = random_graph(seed)
    if not edges:
        return
    g = make_graph(edges)
    nxg = g.to_networkx()
    ref = nx.closeness_centrality(nxg, wf_improved=True)
    got = closeness(g).scores
    for n in nxg:
        assert got[n] == pytest.approx(ref[n], abs=1e-12)
    for u, v, d in nxg.edges(data=True):
        d["length"] = 1.0 / d["weight"]
    ref_w = nx.closeness_centrality(nxg, distance="length", wf_improved=True)
    got_w = closeness(g, "inverse_weight").scores
    for n in nxg:
        assert got_w[n] == pytest.approx(ref_w[n], abs=1e-12)


# ---------------------------------------------------------------------------
# eigenvector


def test_single_edge_any_weight():
    for w in (0.81, 5.0, 1e4):
        r = eigenvector(make_graph([("a", "b", w)]))
        assert r.scores["a"] == pytest.approx(1 / math.sqrt(2), abs=1e-9)
        assert r.eigenvalue == pytest.approx(w, rel=1e-9)


def test_triangle_eigenvector():
    r = eigenvector(make_graph(TRIANGLE))
    for v in r.scores.values():
        assert v == pytest.approx(1 / math.sqrt(3), abs=1e-9)


def test_star_eigenvector():
    s = eigenvector(make_graph(scaled(STAR, 1 / 0.9))).scores
    assert s["h"] == pytest.approx(1 / math.sqrt(2), abs=1e-9)
    assert s["l2"] == pytest.approx(1 / (2 * math.sqrt(2)), abs=1e-9)


def test_weighted_p3_closed_form_and_dense_solver():
    g = make_graph([("a", "b", 2.0), ("b", "c", 1.0)])
    r = eigenvector(g)
    # A = [[0,2,0],[2,0,1],[0,1,0]] has lambda = sqrt(5), v = (2, sqrt 5, 1)/sqrt(10)
    expected = np.array([2, math.sqrt(5), 1]) / math.sqrt(10)
    got = np.array([r.scores[n] for n in "abc"])
    assert np.allclose(got, expected, atol=1e-9)
    vals, vecs = np.linalg.eigh(np.array([[0, 2, 0], [2, 0, 1], [0, 1, 0]], dtype=float))
    assert np.allclose(got, np.abs(vecs[:, -1]), atol=1e-9)
    assert r.eigenvalue == pytest.approx(vals[-1], abs=1e-9)


def test_top_nodes_in_largest_spectral_component():
    k4 = [(f"k{i}", f"k{j}", 1.0) for i in range(4) for j in range(i + 1, 4)]
    r = eigenvector(make_graph(k4 + [("x", "y", 1.0)]))
    assert set(r.ranking[:4]) == {"k0", "k1", "k2", "k3"}
    assert r.scores["x"] < 1e-6


@given(st.integers(0, 10_000))
def test_eigenvector_matches_networkx_on_connected_graphs(seed):
    edges = random_graph(seed, n=15, p=0.4)
    g = make_graph(edges)
    nxg = g.to_networkx()
    if not edges or not nx.is_connected(nxg) or len(nxg) < len({n for e in edges for n in e[:2]}):
        return
    ref = nx.eigenvector_centrality_numpy(nxg, weight="weight")
    r = eigenvector(g)
    for n in nxg:
        assert r.scores[n] == pytest.approx(ref[n], abs=1e-8)
    a = nx.to_numpy_array(nxg, nodelist=g.nodes, weight="weight")
    v = np.array([r.scores[n] for n in g.nodes])
    assert np.linalg.norm(a @ v - r.eigenvalue * v) <= 1e-10 * r.eigenvalue * 1.0001
    assert r.residual <= 1e-10 * r.eigenvalue


@given(st.integers(0, 10_000))
def test_rankings_invariant_under_rescaling(seed):
    edges = random_graph(seed, n=20, p=0.2)
    if not edges:
        return
    g, g1000 = make_graph(edges), make_graph(scaled(edges, 1000.0))
    e1, e2 = eigenvector(g, max_iter=100_000), eigenvector(g1000, max_iter=100_000)
    assert e1.ranking == e2.ranking or all(
        abs(e1.scores[n] - e2.scores[n]) < 1e-9 for n in g.nodes
    )
    for n in g.nodes:
        assert e1.scores[n] == pytest.approx(e2.scores[n], abs=1e-9)
    c1, c2 = closeness(g, "inverse_weight"), closeness(g1000, "inverse_weight")
    assert c1.ranking == c2.ranking
    assert closeness(g).scores == closeness(g1000).scores


def test_permutation_equivariance():
    edges = random_graph(3, n=12, p=0.4)
    relabel = {f"n{i:02d}": f"m{(7 * i) % 12:02d}" for i in range(12)}
    g2 = make_graph([(relabel[u], relabel[v], w) for u, v, w in edges])
    e1, e2 = eigenvector(make_graph(edges)), eigenvector(g2)
    c1, c2 = closeness(make_graph(edges)), closeness(g2)
    for n in e1.scores:
        assert e1.scores[n] == pytest.approx(e2.scores[relabel[n]], abs=1e-12)
        assert c1.scores[n] == pytest.approx(c2.scores[relabel[n]], abs=1e-12)


def test_scores_nonnegative_unit_norm():
    r = eigenvector(make_graph(random_graph(5, n=25, p=0.15)), max_iter=100_000)
    v = np.array(list(r.scores.values()))
    assert (v >= 0).all()
    assert np.linalg.norm(v) == pytest.approx(1.0, abs=1e-12)


def test_non_convergence_reports_residual():
    with pytest.raises(ConvergenceError) as err:
        eigenvector(make_graph(PATH), max_iter=1)
    assert err.value.residual > 0 and err.value.iterations == 1
    assert "residual" in str(err.value)


def test_empty_graph_rejected():
    empty = CoTradeGraph({}, {})
    with pytest.raises(ValueError):
        closeness(empty)
    with pytest.raises(ValueError):
        eigenvector(empty)


def test_ranking_tie_break_by_id_and_csv(tmp_path):
    g = make_graph(TRIANGLE + [("x", "y", 0.9)])
    r = closeness(g)
    assert r.measure is Measure.CLOSENESS
    assert r.ranking == ("a", "b", "c", "x", "y")
    write_ranking_csv(g, r, tmp_path / "c.csv", top=4)
    lines = (tmp_path / "c.csv").read_text().splitlines()
    assert lines[0] == "rank,insider_id,score,component_id"
    assert lines[1].startswith("1,a,") and lines[1].endswith(",0")
    assert lines[4].startswith("4,x,") and lines[4].endswith(",1")
    assert len(lines) == 5
