import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from magtrans.graph import (Dataset, DatasetParseError, Graph, GraphPair, InvalidPermutationError,
                            SchemaError, load_dataset, permute_graph, save_dataset, validate_graph)
from magtrans.synth import make_dataset, preset


def two_node(e01=1.0, e10=1.0, undirected=True):
    e = np.zeros((2, 2, 1))
    e[0, 1, 0], e[1, 0, 0] = e01, e10
    return Graph(np.array([[2.0], [3.0]]), e, undirected)


def random_graph(rng, n, d=2, k=2):
    e = rng.random((n, n, k))
    e = e + e.transpose(1, 0, 2)
    e[np.arange(n), np.arange(n)] = 0
    return Graph(rng.normal(size=(n, d)), e)


def test_validate_symmetric_ok():
    assert validate_graph(two_node()).ok


def test_validate_reports_asymmetry_index():
    res = validate_graph(two_node(1.0, 0.0))
    assert not res.ok
    assert [(v.kind, v.index) for v in res.violations] == [("symmetry", (0, 1, 0))]


def test_validate_reports_nonfinite():
    g = Graph(np.array([[np.nan], [1.0]]), np.zeros((2, 2, 1)))
    kinds = [v.kind for v in validate_graph(g).violations]
    assert kinds == ["finite"]


def test_validate_self_loop():
    e = np.zeros((2, 2, 1))
    e[1, 1, 0] = 0.3
    res = validate_graph(Graph(np.zeros((2, 1)), e))
    assert [(v.kind, v.index) for v in res.violations] == [("self_loop", (1, 1, 0))]


def test_directed_graph_skips_symmetry():
    assert validate_graph(two_node(1.0, 0.0, undirected=False)).ok


def test_graph_is_immutable():
    g = two_node()
    with pytest.raises(ValueError):
        g.f[0, 0] = 9.0


def test_identity_permutation():
    g = random_graph(np.random.default_rng(0), 5)
    assert permute_graph(g, np.arange(5)) == g


def test_swap_is_involution():
    g = random_graph(np.random.default_rng(1), 4)
    perm = np.array([1, 0, 2, 3])
    assert permute_graph(permute_graph(g, perm), perm) == g
    assert permute_graph(g, perm) != g


def test_path_relabel():
    e = np.zeros((3, 3, 1))
    for i, j in [(0, 1), (1, 2)]:
        e[i, j, 0] = e[j, i, 0] = 1
    f = np.array([[10.0], [20.0], [30.0]])
    h = permute_graph(Graph(f, e), np.array([2, 1, 0]))
    # node 0 became 2 and vice versa: path 2-1-0
    assert h.e[2, 1, 0] == 1 and h.e[1, 0, 0] == 1 and h.e[2, 0, 0] == 0
    assert h.f[:, 0].tolist() == [30.0, 20.0, 10.0]
    assert sorted(h.degrees()) == sorted(Graph(f, e).degrees())


@pytest.mark.parametrize("perm", [[0, 0, 1], [0, 1], [0, 1, 3], [2.0, 1.0, 0.0]])
def test_bad_permutation(perm):
    g = random_graph(np.random.default_rng(2), 3)
    with pytest.raises(InvalidPermutationError):
        permute_graph(g, perm)


@settings(max_examples=40, deadline=None)
@given(n=st.integers(1, 7), seed=st.integers(0, 10_000))
def test_permutation_preserves_multisets_and_validity(n, seed):
    rng = np.random.default_rng(seed)
    g = random_graph(rng, n)
    if n > 1 and seed % 3 == 0:
        e = g.e.copy()
        e[0, 1, 0] += 1.0  # break symmetry sometimes
        g = Graph(g.f, e)
    p = rng.permutation(n)
    h = permute_graph(g, p)
    assert sorted(map(tuple, h.f)) == sorted(map(tuple, g.f))
    assert np.array_equal(np.sort(h.e.ravel()), np.sort(g.e.ravel()))
    assert validate_graph(h).ok == validate_graph(g).ok
    assert len(validate_graph(h).violations) == len(validate_graph(g).violations)


def test_pair_rejects_node_count_change():
    with pytest.raises(SchemaError):
        GraphPair(two_node(), random_graph(np.random.default_rng(0), 3, 1, 1))


def test_empty_dataset_roundtrip(tmp_path):
    path = tmp_path / "empty.jsonl"
    save_dataset(Dataset((), (1, 1, 0)), path)
    assert path.read_text() == '{"d":1,"k":1,"c":0}\n'
    assert load_dataset(path) == Dataset((), (1, 1, 0))


def test_single_pair_roundtrip(tmp_path):
    g = two_node()
    ds = Dataset((GraphPair(g, g, np.array([0.1, 1 / 3])),), (1, 1, 2))
    save_dataset(ds, tmp_path / "one.jsonl")
    back = load_dataset(tmp_path / "one.jsonl")
    assert back == ds
    assert back.pairs[0].context[1] == 1 / 3


def test_full_precision_roundtrip(tmp_path):
    rng = np.random.default_rng(5)
    pairs = tuple(GraphPair(random_graph(rng, 4), random_graph(rng, 4), rng.normal(size=3))
                  for _ in range(5))
    ds = Dataset(pairs, (2, 2, 3))
    save_dataset(ds, tmp_path / "r.jsonl")
    assert load_dataset(tmp_path / "r.jsonl") == ds


def test_synthetic_dataset_roundtrip_stable_bytes(tmp_path):
    ds = make_dataset(preset("I", pairs=250))
    save_dataset(ds, tmp_path / "a.jsonl")
    assert load_dataset(tmp_path / "a.jsonl") == ds
    save_dataset(load_dataset(tmp_path / "a.jsonl"), tmp_path / "b.jsonl")
    assert (tmp_path / "a.jsonl").read_bytes() == (tmp_path / "b.jsonl").read_bytes()


def test_malformed_line_reports_line_number(tmp_path):
    path = tmp_path / "bad.jsonl"
    path.write_text('{"d":1,"k":1,"c":0}\n{"n":2,"input":{"f":[[1],[2]],"e":[[[0],[1]],[[1],[0]]]},'
                    '"target":{"f":[[1],[2]],"e":[[[0],[1]],[[1],[0]]]},"context":[]}\n{oops\n')
    with pytest.raises(DatasetParseError) as exc:
        load_dataset(path)
    assert exc.value.line == 3


def test_dimension_mismatch_is_schema_error(tmp_path):
    path = tmp_path / "bad.jsonl"
    path.write_text('{"d":2,"k":1,"c":0}\n{"n":2,"input":{"f":[[1],[2]],"e":[[[0],[1]],[[1],[0]]]},'
                    '"target":{"f":[[1],[2]],"e":[[[0],[1]],[[1],[0]]]},"context":[]}\n')
    with pytest.raises(SchemaError):
        load_dataset(path)


def test_dataset_rejects_mixed_dims():
    a = GraphPair(two_node(), two_node())
    g = random_graph(np.random.default_rng(0), 2, d=2, k=1)
    with pytest.raises(SchemaError):
        Dataset((a, GraphPair(g, g)), (1, 1, 0))


def test_negative_zero_keeps_sign(tmp_path):
    f = np.array([[-0.0], [0.0]])
    g = Graph(f, np.zeros((2, 2, 1)))
    save_dataset(Dataset((GraphPair(g, g),), (1, 1, 0)), tmp_path / "z.jsonl")
    back = load_dataset(tmp_path / "z.jsonl").pairs[0].input.f
    assert np.signbit(back[0, 0]) and not np.signbit(back[1, 0])
