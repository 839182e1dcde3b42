import math

import networkx as nx
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import make_graph
from oracles import brute_egonet, brute_lof
from insidernet.oddball import (
    Law,
    egonet_features,
    fit_power_law,
    local_outlier_factor,
    outline_score,
    rank_anomalies,
    verify_conditions,
    write_oddball_csv,
)
from insidernet.synthetic import heavy_vicinity_graph

UNIT = fit_power_law([(1, 1), (2, 2), (3, 3)])  # y = x


# ---------------------------------------------------------------------------
# out-line score


def test_outline_on_curve_is_zero():
    fit = fit_power_law([(x, 2 * x**1.5) for x in (1, 2, 4, 8)])
    assert outline_score(2 * 3**1.5, 3, fit) == pytest.approx(0.0, abs=1e-12)


def test_outline_hand_value():
    assert outline_score(10, 5, UNIT) == pytest.approx(2 * math.log(6), abs=1e-12)
    assert 2 * math.log(6) == pytest.approx(3.5835, abs=1e-4)


def test_outline_ratio_symmetric():
    # y=5 against expected 10 mirrors y=10 against expected 5
    fit_double = fit_power_law([(1, 2), (2, 4), (3, 6)])
    assert outline_score(5, 5, fit_double) == pytest.approx(outline_score(10, 5, UNIT), abs=1e-12)


@given(st.floats(0.01, 1e4), st.floats(0.01, 1e4))
def test_outline_nonnegative_and_swap_symmetric(y, e):
    assert outline_score(y, e, UNIT) >= 0
    assert outline_score(y, e, UNIT) == pytest.approx(outline_score(e, y, UNIT), rel=1e-12, abs=1e-15)


def test_far_on_curve_point_keeps_outline_order():
    rng = np.random.default_rng(1)
    x = rng.uniform(1, 50, 40)
    y = 1.3 * x**1.4 * np.exp(rng.normal(0, 0.3, 40))
    fit = fit_power_law(np.column_stack([x, y]))
    before = np.argsort([outline_score(a, b, fit) for b, a in zip(x, y)], kind="stable")
    far = 1e6
    refit = fit_power_law(np.vstack([np.column_stack([x, y]), [far, fit.coefficient * far**fit.exponent]]))
    assert refit.exponent == pytest.approx(fit.exponent, abs=1e-9)
    after = np.argsort([outline_score(a, b, refit) for b, a in zip(x, y)], kind="stable")
    assert (before == after).all()


# ---------------------------------------------------------------------------
# power-law fit


def test_exact_power_law_fit():
    fit = fit_power_law([(x, 2 * x**1.5) for x in (1, 2, 3, 5, 8)])
    assert fit.exponent == pytest.approx(1.5, abs=1e-12)
    assert fit.coefficient == pytest.approx(2.0, abs=1e-12)
    assert fit.r_squared == pytest.approx(1.0, abs=1e-12)


@pytest.mark.parametrize("exponent", [1.52, 1.21, 0.75])
def test_fit_recovers_planted_exponent_under_noise(exponent):
    rng = np.random.default_rng(int(exponent * 100))
    x = np.exp(rng.uniform(0, np.log(500), 500))
    y = 1.7 * x**exponent * (1 + 0.05 * rng.standard_normal(500))
    fit = fit_power_law(np.column_stack([x, y]))
    assert abs(fit.exponent - exponent) <= 0.05
    assert 0 <= fit.r_squared <= 1


@pytest.mark.parametrize(
    "points",
    [[(2, 1), (2, 3), (2, 5)], [(1, 1), (2, 2)], [(1, 1), (2, 0), (3, 3)], [(-1, 1), (2, 2), (3, 3)]],
)
def test_fit_rejects_bad_input(points):
    with pytest.raises(ValueError):
        fit_power_law(points)


# ---------------------------------------------------------------------------
# egonet features


def test_triangle_egonet():
    f = egonet_features(make_graph([("a", "b", 1.0), ("b", "c", 1.0), ("a", "c", 1.0)]), "a")
    assert (f.n_nodes, f.n_edges, f.total_weight) == (3, 3, 3.0)
    assert f.lambda_w == pytest.approx(2.0, abs=1e-12)


def test_star_egonet_eigenvalue():
    f = egonet_features(make_graph([("e", "a", 0.9), ("e", "b", 0.85)]), "e")
    assert (f.n_nodes, f.n_edges) == (3, 2)
    assert f.total_weight == pytest.approx(1.75, abs=1e-15)
    assert f.lambda_w == pytest.approx(math.sqrt(0.9**2 + 0.85**2), abs=1e-12)


def test_isolated_or_unknown_ego_rejected():
    with pytest.raises(ValueError):
        egonet_features(make_graph([("a", "b", 0.9)]), "z")


@given(st.integers(0, 10_000), st.integers(5, 50))
def test_egonet_matches_brute_force(seed, n):
    rng = np.random.default_rng(seed)
    edges = [
        (f"v{i}", f"v{j}", float(rng.uniform(0.81, 1.0)))
        for i in range(n) for j in range(i + 1, n) if rng.random() < 0.15
    ]
    if not edges:
        return
    g = make_graph(edges)
    for ego in g.nodes[:8]:
        f = egonet_features(g, ego)
        n_nodes, n_edges, w, lam = brute_egonet(edges, ego)
        assert (f.n_nodes, f.n_edges) == (n_nodes, n_edges)
        assert f.total_weight == pytest.approx(w, abs=1e-12)
        assert f.lambda_w == pytest.approx(lam, abs=1e-9)
        assert f.n_nodes >= 2 and f.lambda_w > 0


# ---------------------------------------------------------------------------
# LOF


def test_grid_interior_lof_near_one():
    grid = np.array([(i, j) for i in range(9) for j in range(9)], dtype=float)
    lof = local_outlier_factor(grid, 4)
    assert lof[4 * 9 + 4] == pytest.approx(1.0, abs=1e-9)


def test_far_point_lof_large():
    rng = np.random.default_rng(0)
    pts = np.vstack([rng.normal(0, 0.1, (30, 2)), [[20.0, 20.0]]])
    lof = local_outlier_factor(pts, 5)
    assert lof[-1] > 50
    assert np.median(lof[:-1]) < 1.5


@given(st.integers(0, 10_000), st.integers(1, 9))
def test_lof_matches_direct_definition(seed, k):
    pts = np.random.default_rng(seed).uniform(0, 5, (10, 2))
    assert np.allclose(local_outlier_factor(pts, k), brute_lof(pts, k), rtol=0, atol=1e-9)


def test_lof_matches_sklearn():
    sk = pytest.importorskip("sklearn.neighbors")
    pts = np.random.default_rng(4).normal(size=(200, 2))
    model = sk.LocalOutlierFactor(n_neighbors=20, algorithm="brute").fit(pts)
    assert np.allclose(local_outlier_factor(pts, 20), -model.negative_outlier_factor_, atol=1e-9)


def test_lof_duplicates_stay_finite():
    lof = local_outlier_factor([(0, 0)] * 5 + [(1, 1)] * 5, 3)
    assert np.isfinite(lof).all()
    assert np.allclose(lof, 1.0)


def test_lof_k_out_of_range():
    with pytest.raises(ValueError):
        local_outlier_factor([(0, 0), (1, 1)], 2)


# ---------------------------------------------------------------------------
# ranking


def test_heavy_vicinity_ego_in_top_percent():
    for seed in range(3):
        g, ego = heavy_vicinity_graph(seed=seed)
        ranks = {s.ego: s.combined_rank for s in rank_anomalies(g, Law.EWPL)}
        assert len(ranks) == 1000
        assert ranks[ego] <= 10


def test_heavy_vicinity_on_low_degree_ego_via_eigenvalue_law():
    g, ego = heavy_vicinity_graph(seed=0, ego_degree=12)
    assert next(s.combined_rank for s in rank_anomalies(g, Law.ELWPL) if s.ego == ego) <= 10


def test_dominant_ego_ranks_first():
    seen = 0
    for seed in range(4):
        g, _ = heavy_vicinity_graph(n=300, seed=seed, ego_degree=12)
        for law in (Law.EDPL, Law.EWPL, Law.ELWPL):
            scores = rank_anomalies(g, law)
            top_out = max(scores, key=lambda s: s.outline)
            top_lof = max(scores, key=lambda s: s.lof)
            if top_out is top_lof:
                seen += 1
                assert top_out.combined_rank == 1
    assert seen > 0


def test_symmetric_graph_gives_equal_scores():
    # disjoint unit-weight K3s and K4s: two feature points, both on the fit, LOF 1 everywhere
    edges = []
    for c in range(4):
        edges += [(f"t{c}{i}", f"t{c}{j}", 1.0) for i in range(3) for j in range(i + 1, 3)]
    for c in range(3):
        edges += [(f"q{c}{i}", f"q{c}{j}", 1.0) for i in range(4) for j in range(i + 1, 4)]
    scores = rank_anomalies(make_graph(edges), k=5)
    assert len({s.combined for s in scores}) == 1
    assert [s.combined_rank for s in scores] == list(range(1, 25))
    assert [s.ego for s in scores] == sorted(s.ego for s in scores)


def test_log_base_leaves_ranking_unchanged():
    g, _ = heavy_vicinity_graph(n=300, seed=2)
    nat = rank_anomalies(g, Law.EWPL)
    ten = rank_anomalies(g, Law.EWPL, log_base=10)
    assert [s.ego for s in nat] == [s.ego for s in ten]
    for a, b in zip(nat, ten):
        assert b.outline == pytest.approx(a.outline / math.log(10), rel=1e-12, abs=1e-15)


def test_rank_anomalies_needs_enough_egos():
    g = make_graph([("a", "b", 0.9), ("b", "c", 0.9)])
    with pytest.raises(ValueError):
        rank_anomalies(g, k=3)
    with pytest.raises(ValueError):
        rank_anomalies(g, Law.ERPL)


def test_scores_nonnegative_and_ranks_total(tmp_path):
    g, _ = heavy_vicinity_graph(n=200, seed=3)
    scores = rank_anomalies(g)
    assert all(s.outline >= 0 and s.lof > 0 for s in scores)
    assert [s.combined_rank for s in scores] == list(range(1, len(scores) + 1))
    write_oddball_csv(scores, tmp_path / "o.csv", top=5)
    lines = (tmp_path / "o.csv").read_text().splitlines()
    assert lines[0] == "rank,insider_id,outline,lof,combined,n_nodes,n_edges,total_weight,lambda_w"
    assert len(lines) == 6


# ---------------------------------------------------------------------------
# power-law conditions


def test_uniform_cliques_have_unit_weight_exponent():
    edges = []
    for size in (3, 4, 5, 6):
        edges += [(f"c{size}_{i}", f"c{size}_{j}", 1.0) for i in range(size) for j in range(i + 1, size)]
    checks = verify_conditions(make_graph(edges))
    assert checks[Law.EWPL].fit.exponent == pytest.approx(1.0, abs=1e-12)
    assert checks[Law.EWPL].passed


def test_random_tree_edge_exponent_follows_tree_relation():
    tree = nx.random_labeled_tree(400, seed=5)
    edges = [(f"t{u:03d}", f"t{v:03d}", 0.9) for u, v in tree.edges]
    check = verify_conditions(make_graph(edges))[Law.EDPL]
    assert check.passed
    # every tree egonet has E = N - 1, so the exponent is the log-log slope of that relation
    n = np.array([tree.degree(v) + 1 for v in tree.nodes], dtype=float)
    slope = np.polyfit(np.log(n), np.log(n - 1), 1)[0]
    assert check.fit.exponent == pytest.approx(slope, abs=1e-9)


def test_too_few_points_is_inconclusive():
    checks = verify_conditions(make_graph([("a", "b", 0.9)]))
    assert checks[Law.EDPL].status == "inconclusive"
    assert checks[Law.ERPL].passed is None
