"""Synthetic translation benchmarks: random input graphs, k-hop targets,
degree-polynomial node attributes."""
from __future__ import annotations

from collections import deque
from dataclasses import asdict, dataclass, fields

import numpy as np

from .graph import Dataset, Graph, GraphPair


@dataclass(frozen=True)
class SynthSpec:
    family: str = "erdos_renyi"  # or "barabasi_albert"
    n: int = 20
    p: float = 0.2
    m: int = 1
    hops: int = 2
    poly: tuple[float, float, float] = (0.0, 1.0, 5.0)  # a*deg^2 + b*deg + c
    pairs: int = 500
    seed: int = 0
    exact_hops: bool = False

    def __post_init__(self):
        object.__setattr__(self, "poly", tuple(float(x) for x in self.poly))
        if self.family not in ("erdos_renyi", "barabasi_albert"):
            raise ValueError(f"unknown graph family {self.family!r}")
        if len(self.poly) != 3:
            raise ValueError("poly needs three coefficients (a, b, c)")
        if self.n < 1 or self.pairs < 0:
            raise ValueError("n must be >= 1 and pairs >= 0")
        if self.family == "erdos_renyi" and not 0 < self.p < 1:
            raise ValueError("edge probability must lie in (0, 1)")
        if self.family == "barabasi_albert" and not (self.m >= 1 and self.n > self.m):
            raise ValueError("Barabasi-Albert needs m >= 1 and n > m")
        if self.hops < 1:
            raise ValueError("hops must be >= 1")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["poly"] = list(self.poly)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "SynthSpec":
        unknown = set(d) - {f.name for f in fields(cls)}
        if unknown:
            raise ValueError(f"unknown spec keys: {sorted(unknown)}")
        return cls(**d)


def preset(name: str, pairs: int = 500, seed: int = 0) -> SynthSpec:
    """The four benchmark definitions: ``"I"``..``"IV"`` (or ``"syn-i"`` etc.)."""
    key = name.upper().replace("SYN-", "").replace("SYN", "").strip("-_ ")
    table = {
        "I": dict(family="erdos_renyi", n=20, p=0.2, hops=2),
        "II": dict(family="erdos_renyi", n=40, p=0.2, hops=2),
        "III": dict(family="erdos_renyi", n=60, p=0.2, hops=2),
        "IV": dict(family="barabasi_albert", n=20, m=1, hops=3),
    }
    if key not in table:
        raise ValueError(f"unknown preset {name!r}")
    return SynthSpec(pairs=pairs, seed=seed, **table[key])


def _graph_from_adj(adj: np.ndarray) -> Graph:
    n = adj.shape[0]
    return Graph(np.zeros((n, 1)), adj.astype(np.float64)[:, :, None], undirected=True)


def gen_erdos_renyi(n: int, p: float, rng: np.random.Generator) -> Graph:
    """Each unordered pair present independently with probability p."""
    upper = np.triu(rng.random((n, n)) < p, 1)
    return _graph_from_adj(upper | upper.T)


def gen_barabasi_albert(n: int, m: int, rng: np.random.Generator) -> Graph:
    """Preferential attachment seeded by a star on m+1 nodes.

    Each later node links to m distinct earlier nodes drawn with probability
    proportional to degree; m=1 gives a tree.
    """
    if m < 1 or n <= m:
        raise ValueError("need m >= 1 and n > m")
    adj = np.zeros((n, n), dtype=bool)
    adj[0, 1:m + 1] = adj[1:m + 1, 0] = True
    deg = adj.sum(axis=1).astype(np.float64)
    for t in range(m + 1, n):
        w = deg[:t] / deg[:t].sum()
        targets = rng.choice(t, size=m, replace=False, p=w)
        adj[t, targets] = adj[targets, t] = True
        deg[targets] += 1
        deg[t] = m
    return _graph_from_adj(adj)


def hop_distances(adj: np.ndarray) -> np.ndarray:
    """All-pairs shortest path lengths by BFS; unreachable pairs get -1."""
    n = adj.shape[0]
    nbrs = [np.flatnonzero(adj[i]) for i in range(n)]
    dist = np.full((n, n), -1, dtype=np.int64)
    for src in range(n):
        dist[src, src] = 0
        queue = deque([src])
        while queue:
            u = queue.popleft()
            for v in nbrs[u]:
                if dist[src, v] < 0:
                    dist[src, v] = dist[src, u] + 1
                    queue.append(v)
    return dist


def khop_target(g: Graph, k: int, exact: bool = False) -> Graph:
    """Connect i != j when their distance in ``g`` is within k (or exactly k)."""
    if k < 1:
        raise ValueError("k must be >= 1")
    adj = g.e[:, :, 0] != 0
    np.fill_diagonal(adj, False)
    dist = hop_distances(adj)
    new = (dist == k) if exact else ((dist >= 1) & (dist <= k))
    return Graph(g.f, new.astype(np.float64)[:, :, None], undirected=True)


def degree_poly_attrs(g: Graph, a: float, b: float, c: float) -> np.ndarray:
    deg = (g.e[:, :, 0] != 0).sum(axis=1).astype(np.float64)
    return (a * deg * deg + b * deg + c)[:, None]


def _with_attrs(g: Graph, poly) -> Graph:
    return Graph(degree_poly_attrs(g, *poly), g.e, g.undirected)


def pair_rng(seed: int, index: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([seed, index]))


def make_pair(spec: SynthSpec, index: int) -> GraphPair:
    rng = pair_rng(spec.seed, index)
    if spec.family == "erdos_renyi":
        g = gen_erdos_renyi(spec.n, spec.p, rng)
    else:
        g = gen_barabasi_albert(spec.n, spec.m, rng)
    target = khop_target(g, spec.hops, spec.exact_hops)
    return GraphPair(_with_attrs(g, spec.poly), _with_attrs(target, spec.poly), np.zeros(0))


def make_dataset(spec: SynthSpec) -> Dataset:
    """``spec.pairs`` independent pairs; pair i depends only on (seed, i)."""
    return Dataset(tuple(make_pair(spec, i) for i in range(spec.pairs)), (1, 1, 0))


def density(g: Graph) -> float:
    n = g.n
    if n < 2:
        return 0.0
    adj = g.e[:, :, 0] != 0
    return float(np.triu(adj, 1).sum() / (n * (n - 1) / 2))


def summarize(ds: Dataset) -> dict:
    if len(ds) == 0:
        return {"pairs": 0}
    din = [density(p.input) for p in ds]
    dout = [density(p.target) for p in ds]
    deg_in = np.concatenate([(p.input.e[:, :, 0] != 0).sum(axis=1) for p in ds])
    deg_out = np.concatenate([(p.target.e[:, :, 0] != 0).sum(axis=1) for p in ds])
    return {
        "pairs": len(ds),
        "input_density": float(np.mean(din)),
        "target_density": float(np.mean(dout)),
        "input_degree_mean": float(deg_in.mean()),
        "input_degree_max": int(deg_in.max()),
        "target_degree_mean": float(deg_out.mean()),
        "target_degree_max": int(deg_out.max()),
    }
