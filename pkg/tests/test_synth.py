import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from magtrans.graph import Graph, validate_graph
from magtrans.synth import (SynthSpec, degree_poly_attrs, density, gen_barabasi_albert,
                            gen_erdos_renyi, hop_distances, khop_target, make_dataset, make_pair,
                            preset, summarize)

from oracles import exact_hop_oracle, khop_oracle


def adj_graph(edges, n):
    e = np.zeros((n, n, 1))
    for i, j in edges:
        e[i, j, 0] = e[j, i, 0] = 1.0
    return Graph(np.zeros((n, 1)), e)


def edge_set(g):
    return {(i, j) for i, j in zip(*np.nonzero(np.triu(g.e[:, :, 0], 1)))}


def test_er_limits():
    rng = np.random.default_rng(0)
    assert not gen_erdos_renyi(10, 1e-12, rng).e.any()
    full = gen_erdos_renyi(10, 1 - 1e-12, rng)
    assert density(full) == 1.0


def test_er_density_syn1():
    rng = np.random.default_rng(0)
    d = np.mean([density(gen_erdos_renyi(20, 0.2, rng)) for _ in range(250)])
    assert abs(d - 0.2) <= 0.03


def test_er_valid_binary():
    g = gen_erdos_renyi(15, 0.3, np.random.default_rng(1))
    assert validate_graph(g).ok and set(np.unique(g.e)) <= {0.0, 1.0}


def test_ba_two_nodes():
    g = gen_barabasi_albert(2, 1, np.random.default_rng(0))
    assert edge_set(g) == {(0, 1)}


@pytest.mark.parametrize("seed", range(5))
def test_ba_tree_connected(seed):
    g = gen_barabasi_albert(20, 1, np.random.default_rng(seed))
    assert len(edge_set(g)) == 19
    assert np.all(hop_distances(g.e[:, :, 0] > 0) >= 0)


def test_ba_m2_edge_count():
    g = gen_barabasi_albert(12, 2, np.random.default_rng(0))
    # star on 3 nodes (2 edges) then 2 per new node
    assert len(edge_set(g)) == 2 + 2 * 9


def test_ba_heavier_tail_than_er():
    rng = np.random.default_rng(3)
    ba = [gen_barabasi_albert(20, 1, rng) for _ in range(250)]
    # E-R at the same density as a 20-node tree
    er = [gen_erdos_renyi(20, 0.1, rng) for _ in range(250)]
    assert np.mean([g.degrees().max() for g in ba]) > np.mean([g.degrees().max() for g in er])


def test_ba_rejects_bad_m():
    with pytest.raises(ValueError):
        gen_barabasi_albert(3, 3, np.random.default_rng(0))


def test_khop_path():
    g = adj_graph([(0, 1), (1, 2)], 3)
    assert edge_set(khop_target(g, 2)) == {(0, 1), (1, 2), (0, 2)}
    assert edge_set(khop_target(g, 2, exact=True)) == {(0, 2)}


def test_khop_k1_identity_and_complete():
    g = gen_erdos_renyi(12, 0.3, np.random.default_rng(2))
    assert khop_target(g, 1) == g
    full = adj_graph([(i, j) for i in range(5) for j in range(i + 1, 5)], 5)
    assert khop_target(full, 3) == full


@settings(max_examples=30, deadline=None)
@given(n=st.integers(1, 12), p=st.floats(0.05, 0.6), k=st.integers(1, 4), seed=st.integers(0, 10**6))
def test_khop_matches_matrix_power_oracle(n, p, k, seed):
    g = gen_erdos_renyi(n, p, np.random.default_rng(seed))
    adj = g.e[:, :, 0] > 0
    assert np.array_equal(khop_target(g, k).e[:, :, 0] > 0, khop_oracle(adj, k))
    assert np.array_equal(khop_target(g, k, exact=True).e[:, :, 0] > 0, exact_hop_oracle(adj, k))
    once = khop_target(g, k)
    assert khop_target(once, 1) == once
    assert np.all(khop_target(g, k + 1).e >= once.e)


def test_degree_poly_examples():
    star = adj_graph([(0, 1), (0, 2), (0, 3)], 5)
    f = degree_poly_attrs(star, 0, 1, 5)[:, 0]
    assert f[0] == 8.0 and f[4] == 5.0
    path = adj_graph([(0, 1), (1, 2)], 3)
    assert degree_poly_attrs(path, 1, 0, 0)[1, 0] == 4.0


def test_syn1_dataset_fidelity():
    ds = make_dataset(preset("I", pairs=250))
    assert len(ds) == 250 and ds.dims == (1, 1, 0)
    assert abs(np.mean([density(p.input) for p in ds]) - 0.2) <= 0.03
    for p in ds:
        assert validate_graph(p.input).ok and validate_graph(p.target).ok
        assert np.array_equal(p.target.f[:, 0], p.target.degrees() + 5.0)
        assert np.array_equal(p.input.f[:, 0], p.input.degrees() + 5.0)
        assert p.context.shape == (0,)


def test_syn4_targets_densify_trees():
    ds = make_dataset(preset("IV", pairs=20))
    for p in ds:
        assert len(edge_set(p.input)) == 19
        assert edge_set(p.input) <= edge_set(p.target)
        assert len(edge_set(p.target)) > 19


def test_presets():
    assert preset("syn-ii").n == 40 and preset("III").n == 60
    iv = preset("IV")
    assert (iv.family, iv.m, iv.hops) == ("barabasi_albert", 1, 3)
    assert preset("I").pairs == 500
    with pytest.raises(ValueError):
        preset("V")


def test_pairs_depend_only_on_seed_and_index():
    spec = preset("I", pairs=10, seed=7)
    ds = make_dataset(spec)
    assert make_pair(spec, 6) == ds.pairs[6]
    assert make_dataset(SynthSpec(**{**spec.to_dict(), "pairs": 4})).pairs == ds.pairs[:4]
    assert make_dataset(preset("I", pairs=10, seed=8)).pairs[0] != ds.pairs[0]


@pytest.mark.parametrize("bad", [dict(p=0.0), dict(p=1.0), dict(hops=0), dict(family="ws"),
                                 dict(family="barabasi_albert", m=0), dict(poly=(1, 2))])
def test_spec_validation(bad):
    with pytest.raises(ValueError):
        SynthSpec(**bad)


def test_spec_roundtrip_and_unknown_keys():
    s = preset("IV", pairs=3)
    assert SynthSpec.from_dict(s.to_dict()) == s
    with pytest.raises(ValueError):
        SynthSpec.from_dict({"family": "erdos_renyi", "nodes": 4})


def test_summary_fields():
    s = summarize(make_dataset(preset("I", pairs=20)))
    assert s["pairs"] == 20 and 0.1 < s["input_density"] < 0.3
    assert s["target_density"] > s["input_density"]
