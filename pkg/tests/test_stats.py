import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import make_graph
from insidernet.ingest import aggregate_daily
from insidernet.network import CoTradeGraph, build_graph
from insidernet.nulls import CalibratedNullConfig, generate_calibrated
from insidernet.stats import (
    REPORT_COLUMNS,
    MetricVector,
    compute_metrics,
    nearest_rank,
    read_replica_metrics,
    report_rows,
    summarize_metric,
    summarize_nulls,
    write_replica_metrics,
    write_report_csv,
)
from insidernet.synthetic import PlantedConfig, planted_cliques


def mv(**kw):
    base = dict(
        nodes=0, edges=0, avg_degree=math.nan, n_components=0, giant_component_size=0,
        multi_firm_insiders=0, prop_multi_firm=0.0, avg_edge_weight=math.nan, ultra_strong_ties=0,
    )
    return MetricVector(**(base | kw))


def test_single_edge():
    m = compute_metrics(make_graph([("a", "b", 0.95)]))
    assert (m.nodes, m.edges, m.n_components, m.ultra_strong_ties) == (2, 1, 1, 1)
    assert m.avg_degree == 1.0


def test_triangle_hand_values():
    m = compute_metrics(make_graph([("a", "b", 0.85), ("b", "c", 0.91), ("a", "c", 0.92)]))
    assert m.ultra_strong_ties == 2
    assert m.avg_edge_weight == pytest.approx(0.8933333333333333, abs=1e-12)
    assert m.giant_component_size == 3


def test_ultra_strong_is_strict():
    assert compute_metrics(make_graph([("a", "b", 0.9)])).ultra_strong_ties == 0


def test_empty_graph_flags_averages():
    m = compute_metrics(CoTradeGraph({}, {}, population=10))
    assert (m.nodes, m.edges, m.n_components, m.giant_component_size) == (0, 0, 0, 0)
    assert set(m.undefined) == {"avg_degree", "avg_edge_weight"}


def test_prop_multi_firm_uses_population():
    g = make_graph([("a", "b", 0.9, "F1"), ("a", "c", 0.9, "F2")], population=100)
    m = compute_metrics(g)
    assert m.multi_firm_insiders == 1
    assert m.prop_multi_firm == 0.01
    assert compute_metrics(g, population=4).prop_multi_firm == 0.25


def test_nearest_rank():
    vals = list(range(1, 101))
    assert nearest_rank(vals, 5) == 5.0
    assert nearest_rank(vals, 95) == 95.0
    assert nearest_rank([3.0, 1.0, 2.0], 50) == 2.0
    assert nearest_rank([7.0], 5) == 7.0
    with pytest.raises(ValueError):
        nearest_rank([], 50)


def test_z_examples():
    assert summarize_metric("x", 5.0, [4.0, 5.0, 6.0]).z_score == 0.0
    # mean 4, sample std 2
    s = summarize_metric("x", 10.0, [2.0, 4.0, 6.0])
    assert (s.mean, s.std, s.z_score) == (4.0, 2.0, 3.0)
    assert s.p_value == 0.0 and s.direction == "excess"


def test_zero_variance_is_undefined():
    s = summarize_metric("x", 3.0, [1.0, 1.0, 1.0])
    assert s.undefined and s.z_score is None


def test_deficit_metric_p_values():
    s = summarize_metric("x", 1.0, [1.0, 2.0, 3.0, 4.0])
    assert s.direction == "deficit"
    assert s.z_score < 0
    assert s.p_value == 0.25
    assert s.p_value_two_sided == 0.5


def test_nan_replicas_are_dropped():
    s = summarize_metric("x", 2.0, [1.0, math.nan, 3.0])
    assert s.n_replicas == 2 and s.mean == 2.0


def test_needs_two_replicas():
    with pytest.raises(ValueError):
        summarize_nulls(mv(), [mv()])


finite = st.floats(-1e3, 1e3, allow_nan=False)


@given(finite, st.lists(finite, min_size=2, max_size=30), st.floats(-1e3, 1e3))
def test_z_is_shift_invariant(obs, reps, c):
    a = summarize_metric("x", obs, reps)
    b = summarize_metric("x", obs + c, [r + c for r in reps])
    if a.undefined or a.std < 1e-6:
        return
    assert b.z_score == pytest.approx(a.z_score, rel=1e-6, abs=1e-6)


@given(finite, st.lists(finite, min_size=2, max_size=30))
def test_percentiles_ordered_and_z_flag_consistent(obs, reps):
    s = summarize_metric("x", obs, reps)
    assert s.p5 <= s.p95
    assert (s.z_score is None) == s.undefined


def test_mean_inside_envelope_for_unimodal_draws():
    rng = np.random.default_rng(0)
    for _ in range(20):
        s = summarize_metric("x", 0.0, rng.normal(5, 2, size=100).tolist())
        assert s.p5 <= s.mean <= s.p95


def test_report_without_nulls_marks_columns_absent(tmp_path):
    rows = report_rows(mv(nodes=3), [])
    assert [r["model"] for r in rows] == ["none"] * 9
    assert all(r[c] == "" for r in rows for c in REPORT_COLUMNS[3:])
    write_report_csv(mv(nodes=3), [], tmp_path / "r.csv")
    assert (tmp_path / "r.csv").read_text().splitlines()[1] == "nodes,none,3,,,,,,,"


def test_replica_metrics_round_trip(tmp_path):
    reps = [mv(nodes=2, edges=1, avg_degree=1.0, avg_edge_weight=0.85), mv()]
    write_replica_metrics(reps, tmp_path / "m.csv")
    back = read_replica_metrics(tmp_path / "m.csv")
    assert back[0] == reps[0]
    assert math.isnan(back[1].avg_degree) and back[1].nodes == 0


@pytest.mark.slow
def test_edge_z_grows_with_planted_cliques():
    zs = []
    for k in (1, 3, 5):
        ds = planted_cliques(PlantedConfig(n_cliques=k, dense_cliques=min(2, k)))
        logs = aggregate_daily(ds.events)
        obs = compute_metrics(build_graph(logs))
        cfg = CalibratedNullConfig(seed=1)
        reps = [compute_metrics(build_graph(aggregate_daily(generate_calibrated(logs, cfg, r)))) for r in range(100)]
        zs.append(summarize_nulls(obs, reps)["edges"].z_score)
    assert zs[0] < zs[1] < zs[2]
