import json

import numpy as np
import pytest

from magtrans.graph import Dataset, Graph, GraphPair, permute_graph
from magtrans.metrics import (EvalReport, MetricDomainError, UndefinedMetricError, average_ranks,
                              average_reports, consistency_fraction, copy_input_report,
                              edge_accuracy, edge_entries, evaluate, mse, node_accuracy, pearson,
                              r2, score, spearman)
from magtrans.model import ModelConfig, init_model
from magtrans.synth import make_dataset, preset


def test_mse_r2_examples():
    x = np.array([1.0, 2.0, 3.0])
    assert mse(x, x) == 0.0 and r2(x, x) == 1.0
    assert r2(x, np.full(3, 2.0)) == 0.0
    assert np.isclose(mse([1, 2, 3], [1, 2, 4]), 1 / 3)
    assert r2([1, 2, 3], [1, 2, 4]) == 0.5


def test_r2_zero_variance_undefined():
    with pytest.raises(UndefinedMetricError):
        r2([2.0, 2.0], [1.0, 3.0])


def test_correlation_examples():
    x = np.array([0.0, 1.0, 2.5, 4.0])
    assert np.isclose(pearson(x, 2 * x + 1), 1.0) and np.isclose(spearman(x, 2 * x + 1), 1.0)
    assert np.isclose(spearman(x - 1, (x - 1) ** 3), 1.0) and pearson(x - 1, (x - 1) ** 3) < 1.0
    assert spearman([1, 2, 2, 4], [1, 3, 3, 8]) == 1.0


def test_average_ranks_ties():
    assert average_ranks([10, 20, 20, 40]).tolist() == [1.0, 2.5, 2.5, 4.0]
    assert average_ranks([3, 3, 3]).tolist() == [2.0, 2.0, 2.0]


def test_correlation_zero_variance_undefined():
    with pytest.raises(UndefinedMetricError):
        pearson([1.0, 1.0, 1.0], [1.0, 2.0, 3.0])
    with pytest.raises(UndefinedMetricError):
        spearman([1.0, 2.0], [5.0, 5.0])


def test_correlation_invariances():
    rng = np.random.default_rng(0)
    x, y = rng.normal(size=30), rng.normal(size=30)
    assert np.isclose(pearson(3 * x + 2, 0.5 * y - 1), pearson(x, y), atol=1e-12)
    assert np.isclose(spearman(np.exp(x), y ** 3), spearman(x, y), atol=1e-12)


def square_edges(pairs_on, n=4):
    e = np.zeros((n, n, 1))
    for i, j in pairs_on:
        e[i, j, 0] = e[j, i, 0] = 1.0
    return e


def test_edge_accuracy_examples():
    t = square_edges([(0, 1), (1, 2), (2, 3)])
    assert edge_accuracy(t, t) == 1.0
    assert edge_accuracy(1 - t - np.eye(4)[:, :, None], t) == 0.0
    wrong = square_edges([(0, 1), (1, 2), (2, 3), (0, 3)])
    assert edge_accuracy(wrong, t) == 5 / 6
    assert edge_entries(t).size == 6 and edge_entries(t, undirected=False).size == 12


def test_accuracy_needs_binary_truth():
    with pytest.raises(MetricDomainError):
        node_accuracy([0.2], [0.5])
    with pytest.raises(ValueError):
        node_accuracy([0.2], [1.0], threshold=1.0)


def test_edge_accuracy_permutation_invariant():
    rng = np.random.default_rng(1)
    t = square_edges([(0, 1), (2, 4), (3, 5)], 6)
    pe = rng.random((6, 6, 1))
    pe = (pe + pe.transpose(1, 0, 2)) / 2
    pe[np.arange(6), np.arange(6)] = 0
    p = rng.permutation(6)
    gt, gp = Graph(np.zeros((6, 1)), t), Graph(np.zeros((6, 1)), pe)
    assert edge_accuracy(permute_graph(gp, p).e, permute_graph(gt, p).e) == edge_accuracy(pe, t)


def test_consistency_fraction():
    e = square_edges([(0, 1), (1, 2)], 3)
    g = Graph(np.array([[6.0], [7.3], [9.0]]), e)
    assert consistency_fraction([g]) == 2 / 3


def test_score_matches_direct_calls_on_concatenation():
    ds = make_dataset(preset("I", pairs=6))
    rng = np.random.default_rng(2)
    preds = []
    for p in ds:
        e = np.clip(p.target.e + rng.normal(scale=0.3, size=p.target.e.shape), 0, 1)
        e = np.triu(e[:, :, 0], 1)
        preds.append(Graph(p.target.f + rng.normal(size=p.target.f.shape), (e + e.T)[:, :, None]))
    rep = score(preds, [p.target for p in ds])
    pf = np.concatenate([g.f[:, 0] for g in preds])
    tf = np.concatenate([p.target.f[:, 0] for p in ds])
    pe = np.concatenate([edge_entries(g.e) for g in preds])
    te = np.concatenate([edge_entries(p.target.e) for p in ds])
    assert rep.n_mse == mse(pf, tf) and rep.n_r2 == r2(tf, pf)
    assert rep.n_pearson == pearson(pf, tf) and rep.n_spearman == spearman(pf, tf)
    assert rep.e_mse == mse(pe, te) and rep.e_acc == np.mean((pe >= 0.5) == (te >= 0.5))
    assert rep.n_acc is None  # node attributes are not binary here


def test_copy_on_identity_dataset_is_perfect():
    ds = make_dataset(preset("I", pairs=5))
    ident = Dataset(tuple(GraphPair(p.input, p.input) for p in ds), ds.dims)
    rep = copy_input_report(ident)
    assert rep.e_acc == 1.0 and rep.e_mse == 0.0 and rep.n_mse == 0.0 and rep.consistency == 1.0


def test_untrained_model_no_better_than_majority():
    ds = make_dataset(preset("I", pairs=20))
    te = np.concatenate([edge_entries(p.target.e) for p in ds])
    majority = max(te.mean(), 1 - te.mean())
    for seed in range(3):
        rep = evaluate(init_model(ModelConfig(seed=seed)), ds)
        assert 1 - majority - 0.02 <= rep.e_acc <= majority + 0.02


def test_report_json_and_table_agree():
    ds = make_dataset(preset("I", pairs=4))
    rep = evaluate(init_model(ModelConfig()), ds, per_pair=True)
    d = json.loads(rep.to_json())
    assert len(d["per_pair"]) == 4
    table = rep.to_table()
    for name in EvalReport.METRICS:
        v = d[name]
        assert (f"{v:.6f}" if v is not None else "undefined") in table
    assert EvalReport.from_dict(d).to_table() == table


def test_undefined_marker_in_table_and_json():
    g = Graph(np.full((3, 1), 5.0), np.zeros((3, 3, 1)))
    rep = score([g], [g])
    assert rep.n_r2 is None and json.loads(rep.to_json())["n_r2"] is None
    assert "undefined" in rep.to_table()


def test_average_reports_fieldwise():
    a = EvalReport(pairs=2, n_mse=1.0, e_acc=0.5, n_r2=None)
    b = EvalReport(pairs=3, n_mse=3.0, e_acc=0.7, n_r2=0.2)
    m = average_reports([a, b])
    assert m.pairs == 5 and m.n_mse == 2.0 and np.isclose(m.e_acc, 0.6) and m.n_r2 is None


def test_empty_input_gives_empty_report():
    rep = score([], [])
    assert rep.pairs == 0 and rep.n_mse is None
