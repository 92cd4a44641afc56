"""Multi-attributed graph data model, validation, permutation and dataset IO."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np


class InvalidPermutationError(ValueError):
    pass


class DatasetParseError(ValueError):
    def __init__(self, msg: str, line: int):
        super().__init__(f"line {line}: {msg}")
        self.line = line


class SchemaError(ValueError):
    pass


def _frozen(a, ndim: int, what: str) -> np.ndarray:
    arr = np.array(a, dtype=np.float64, copy=True)
    if arr.ndim != ndim:
        raise ValueError(f"{what} must have {ndim} dims, got shape {arr.shape}")
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True, eq=False)
class Graph:
    """Dense graph: node attributes ``f`` (N x D), edge attributes ``e`` (N x N x K).

    Edge existence is carried by the attribute values; every ordered pair
    has an entry.
    """

    f: np.ndarray
    e: np.ndarray
    undirected: bool = True

    def __post_init__(self):
        f = _frozen(self.f, 2, "node attributes")
        e = _frozen(self.e, 3, "edge attributes")
        if e.shape[0] != e.shape[1] or e.shape[0] != f.shape[0]:
            raise ValueError(f"edge tensor {e.shape} does not match {f.shape[0]} nodes")
        object.__setattr__(self, "f", f)
        object.__setattr__(self, "e", e)

    @property
    def n(self) -> int:
        return self.f.shape[0]

    @property
    def d(self) -> int:
        return self.f.shape[1]

    @property
    def k(self) -> int:
        return self.e.shape[2]

    def __eq__(self, other):
        if not isinstance(other, Graph):
            return NotImplemented
        return (self.undirected == other.undirected
                and self.f.shape == other.f.shape and self.e.shape == other.e.shape
                and np.array_equal(self.f, other.f) and np.array_equal(self.e, other.e))

    def __hash__(self):
        return hash((self.f.shape, self.e.shape, self.f.tobytes(), self.e.tobytes()))

    def binary_adjacency(self, threshold: float = 0.5, channel: int = 0) -> np.ndarray:
        a = self.e[:, :, channel] >= threshold
        np.fill_diagonal(a, False)
        return a

    def degrees(self, threshold: float = 0.5, channel: int = 0) -> np.ndarray:
        return self.binary_adjacency(threshold, channel).sum(axis=1)


@dataclass(frozen=True, eq=False)
class GraphPair:
    input: Graph
    target: Graph
    context: np.ndarray = field(default_factory=lambda: np.zeros(0))

    def __post_init__(self):
        object.__setattr__(self, "context", _frozen(self.context, 1, "context"))
        if self.input.n != self.target.n:
            raise SchemaError(f"input has {self.input.n} nodes, target {self.target.n}")
        if (self.input.d, self.input.k) != (self.target.d, self.target.k):
            raise SchemaError("input and target disagree on attribute widths")

    @property
    def dims(self) -> tuple[int, int, int]:
        return self.input.d, self.input.k, self.context.shape[0]

    def __eq__(self, other):
        if not isinstance(other, GraphPair):
            return NotImplemented
        return (self.input == other.input and self.target == other.target
                and np.array_equal(self.context, other.context))


@dataclass(frozen=True)
class Dataset:
    pairs: tuple[GraphPair, ...]
    dims: tuple[int, int, int]

    def __post_init__(self):
        object.__setattr__(self, "pairs", tuple(self.pairs))
        object.__setattr__(self, "dims", tuple(int(x) for x in self.dims))
        for i, p in enumerate(self.pairs):
            if p.dims != self.dims:
                raise SchemaError(f"pair {i} has dims {p.dims}, dataset declares {self.dims}")

    def __len__(self):
        return len(self.pairs)

    def __iter__(self):
        return iter(self.pairs)

    def __getitem__(self, idx):
        if isinstance(idx, slice):
            return Dataset(self.pairs[idx], self.dims)
        return self.pairs[idx]

    def subset(self, indices) -> "Dataset":
        return Dataset(tuple(self.pairs[i] for i in indices), self.dims)

    def halves(self) -> tuple["Dataset", "Dataset"]:
        """Split into the two folds used for two-fold validation."""
        mid = (len(self.pairs) + 1) // 2
        return self[:mid], self[mid:]


@dataclass(frozen=True)
class Violation:
    kind: str  # "finite" | "symmetry" | "self_loop" | "shape"
    index: tuple
    detail: str = ""


@dataclass(frozen=True)
class ValidationResult:
    violations: tuple[Violation, ...] = ()

    @property
    def ok(self) -> bool:
        return not self.violations

    def __bool__(self):
        return self.ok


def validate_graph(g: Graph) -> ValidationResult:
    """Check finiteness, zero self-loops and (if undirected) edge symmetry."""
    out: list[Violation] = []
    for idx in np.argwhere(~np.isfinite(g.f)):
        out.append(Violation("finite", ("f",) + tuple(int(i) for i in idx)))
    for idx in np.argwhere(~np.isfinite(g.e)):
        out.append(Violation("finite", ("e",) + tuple(int(i) for i in idx)))
    diag = g.e[np.arange(g.n), np.arange(g.n), :]
    for i, k in np.argwhere(diag != 0):
        out.append(Violation("self_loop", (int(i), int(i), int(k))))
    if g.undirected:
        # NaN != NaN would double-report non-finite entries as asymmetric
        asym = (g.e != np.swapaxes(g.e, 0, 1)) & np.isfinite(g.e) & np.isfinite(np.swapaxes(g.e, 0, 1))
        for i, j, k in np.argwhere(asym):
            if i < j:
                out.append(Violation("symmetry", (int(i), int(j), int(k)),
                                     f"{g.e[i, j, k]!r} != {g.e[j, i, k]!r}"))
    return ValidationResult(tuple(out))


def _check_perm(perm, n: int) -> np.ndarray:
    p = np.asarray(perm)
    if p.shape != (n,) or not np.issubdtype(p.dtype, np.integer):
        raise InvalidPermutationError(f"expected {n} integer indices, got {p!r}")
    if not np.array_equal(np.sort(p), np.arange(n)):
        raise InvalidPermutationError(f"{p.tolist()} is not a bijection on 0..{n - 1}")
    return p


def permute_graph(g: Graph, perm) -> Graph:
    """Relabel node i as perm[i]."""
    p = _check_perm(perm, g.n)
    inv = np.argsort(p)
    return Graph(g.f[inv], g.e[np.ix_(inv, inv)], g.undirected)


def permute_pair(pair: GraphPair, perm) -> GraphPair:
    return GraphPair(permute_graph(pair.input, perm), permute_graph(pair.target, perm), pair.context)


# JSON-lines dataset format

def _num(x: float) -> str:
    x = float(x)
    if x == 0 and np.signbit(x):
        return "-0.0"  # "-0" would parse back as the integer 0
    return format(x, ".17g") if np.isfinite(x) else json.dumps(x)


def _encode(a: np.ndarray) -> str:
    if a.ndim == 1:
        return "[" + ",".join(_num(x) for x in a) + "]"
    return "[" + ",".join(_encode(x) for x in a) + "]"


def _graph_json(g: Graph) -> str:
    extra = "" if g.undirected else ',"undirected":false'
    return '{"f":' + _encode(g.f) + ',"e":' + _encode(g.e) + extra + "}"


def dumps_pair(pair: GraphPair) -> str:
    return ('{"n":' + str(pair.input.n) + ',"input":' + _graph_json(pair.input)
            + ',"target":' + _graph_json(pair.target)
            + ',"context":' + _encode(pair.context) + "}")


def dump_dataset(d: Dataset) -> str:
    D, K, c = d.dims
    lines = [json.dumps({"d": D, "k": K, "c": c}, separators=(",", ":"))]
    lines.extend(dumps_pair(p) for p in d.pairs)
    return "\n".join(lines) + "\n"


def save_dataset(d: Dataset, path) -> None:
    Path(path).write_text(dump_dataset(d))


def _graph_from(obj, n: int, D: int, K: int, line: int) -> Graph:
    try:
        f = np.array(obj["f"], dtype=np.float64)
        e = np.array(obj["e"], dtype=np.float64)
    except (KeyError, TypeError, ValueError) as exc:
        raise DatasetParseError(f"bad graph record ({exc})", line) from None
    if D == 0 and f.size == 0:
        f = np.zeros((n, 0))
    if f.shape != (n, D) or e.shape != (n, n, K):
        raise SchemaError(f"line {line}: got f{f.shape} e{e.shape}, expected f{(n, D)} e{(n, n, K)}")
    return Graph(f, e, undirected=bool(obj.get("undirected", True)))


def load_dataset(path) -> Dataset:
    text = Path(path).read_text()
    lines = text.splitlines()
    if not lines:
        raise DatasetParseError("missing header", 1)
    try:
        header = json.loads(lines[0])
        dims = (int(header["d"]), int(header["k"]), int(header["c"]))
    except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
        raise DatasetParseError(f"bad header ({exc})", 1) from None
    D, K, c = dims
    pairs = []
    for lineno, raw in enumerate(lines[1:], start=2):
        if not raw.strip():
            continue
        try:
            rec = json.loads(raw)
            n = int(rec["n"])
            ctx = np.array(rec.get("context", []), dtype=np.float64).reshape(-1)
        except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
            raise DatasetParseError(f"bad pair record ({exc})", lineno) from None
        if ctx.shape[0] != c:
            raise SchemaError(f"line {lineno}: context length {ctx.shape[0]}, header says {c}")
        gi = _graph_from(rec.get("input"), n, D, K, lineno)
        gt = _graph_from(rec.get("target"), n, D, K, lineno)
        pairs.append(GraphPair(gi, gt, ctx))
    return Dataset(tuple(pairs), dims)
