"""One translation block: edge path and node path.

The batched entry point :func:`block_forward` works on autodiff tensors
with a leading batch axis: node attributes ``(B, N, D)``, edge attributes
``(B, N, N, K)``, context ``(B, c)``. The graph-level functions below it
(``pair_features``, ``aggregate_edge_influence``, ``run_block`` ...) take
:class:`Graph` objects and return numpy arrays.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import autodiff as ad
from .autodiff import ShapeError, Tensor
from .graph import Graph


class SelfPairError(ValueError):
    pass


def glorot(rng: np.random.Generator, fan_in: int, fan_out: int, shape=None) -> np.ndarray:
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=shape or (fan_in, fan_out))


class MLP:
    """Dense layers ``x -> act_i(x @ W_i + b_i)`` over the last axis."""

    def __init__(self, weights, biases, activations):
        if not (len(weights) == len(biases) == len(activations)):
            raise ValueError("weights, biases and activations must have equal length")
        for a in activations:
            if a not in ad.ACTIVATIONS:
                raise ValueError(f"unknown activation {a!r}")
        self.weights = [w if isinstance(w, Tensor) or w is None else Tensor(w, requires_grad=True)
                        for w in weights]
        self.biases = [b if isinstance(b, Tensor) else Tensor(b, requires_grad=True) for b in biases]
        self.activations = list(activations)

    @classmethod
    def init(cls, rng, sizes, hidden_act="tanh", out_act="identity"):
        sizes = list(sizes)
        ws = [glorot(rng, a, b) for a, b in zip(sizes[:-1], sizes[1:])]
        bs = [np.zeros(b) for b in sizes[1:]]
        acts = [hidden_act] * (len(ws) - 1) + [out_act]
        return cls(ws, bs, acts)

    @property
    def in_width(self) -> int:
        return self.weights[0].shape[0]

    @property
    def out_width(self) -> int:
        return self.weights[-1].shape[1]

    def named_parameters(self, prefix=""):
        out = []
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            out.append((f"{prefix}W{i}", w))
            out.append((f"{prefix}b{i}", b))
        return out

    def _tail(self, h: Tensor, start: int) -> Tensor:
        for w, b, act in zip(self.weights[start:], self.biases[start:], self.activations[start:]):
            h = ad.ACTIVATIONS[act](ad.matmul(h, w) + b)
        return h

    def __call__(self, x) -> Tensor:
        x = ad.as_tensor(x)
        if x.shape[-1] != self.in_width:
            raise ShapeError(f"MLP input width {x.shape[-1]} != {self.in_width} (input shape {x.shape})")
        return self._tail(x, 0)


class InfluenceMLP(MLP):
    """MLP over ``[F_u | E_uv | F_v]`` whose first layer is stored in three blocks.

    With ``tied=True`` the rows acting on ``F_u`` and on ``F_v`` are one
    array, so the influence of (u, v) and (v, u) coincide whenever the edge
    attributes are symmetric.
    """

    def __init__(self, w_u, w_e, w_v, biases, rest_weights, activations, tied: bool):
        self.tied = tied
        self.w_u = w_u if isinstance(w_u, Tensor) else Tensor(w_u, requires_grad=True)
        self.w_e = w_e if isinstance(w_e, Tensor) else Tensor(w_e, requires_grad=True)
        if tied:
            self.w_v = self.w_u
        else:
            self.w_v = w_v if isinstance(w_v, Tensor) else Tensor(w_v, requires_grad=True)
        # slot 0 stays empty: the first layer lives in w_u / w_e / w_v
        super().__init__([None] + list(rest_weights), biases, activations)
        self.d = self.w_u.shape[0]
        self.k = self.w_e.shape[0]

    @classmethod
    def init(cls, rng, d, k, hidden, out, tied=True, hidden_act="tanh", out_act="tanh"):
        sizes = [2 * d + k] + list(hidden) + [out]
        w0 = glorot(rng, sizes[0], sizes[1])
        w_u, w_e, w_v = w0[:d], w0[d:d + k], w0[d + k:]
        rest = [glorot(rng, a, b) for a, b in zip(sizes[1:-1], sizes[2:])]
        bs = [np.zeros(b) for b in sizes[1:]]
        acts = [hidden_act] * (len(sizes) - 2) + [out_act]
        return cls(w_u, w_e, None if tied else w_v, bs, rest, acts, tied)

    def first_layer_matrix(self) -> np.ndarray:
        return np.concatenate([self.w_u.data, self.w_e.data, self.w_v.data], axis=0)

    @property
    def in_width(self) -> int:
        return 2 * self.w_u.shape[0] + self.w_e.shape[0]

    @property
    def out_width(self) -> int:
        return self.biases[-1].shape[0]

    def named_parameters(self, prefix=""):
        out = [(f"{prefix}W0_node", self.w_u), (f"{prefix}W0_edge", self.w_e)]
        if not self.tied:
            out.append((f"{prefix}W0_node_v", self.w_v))
        out.append((f"{prefix}b0", self.biases[0]))
        for i in range(1, len(self.biases)):
            out.append((f"{prefix}W{i}", self.weights[i]))
            out.append((f"{prefix}b{i}", self.biases[i]))
        return out

    def _first(self, node_part: Tensor, e: Tensor) -> Tensor:
        h = node_part + ad.matmul(e, self.w_e) + self.biases[0]
        h = ad.ACTIVATIONS[self.activations[0]](h)
        return self._tail(h, 1)

    def __call__(self, x) -> Tensor:
        x = ad.as_tensor(x)
        if x.shape[-1] != self.in_width:
            raise ShapeError(f"influence input width {x.shape[-1]} != {self.in_width} (input shape {x.shape})")
        d, k = self.d, self.k
        fu, e, fv = x[..., :d], x[..., d:d + k], x[..., d + k:]
        # (u-part + v-part) first: commutative, so swapping u and v is bit-exact
        return self._first(ad.matmul(fu, self.w_u) + ad.matmul(fv, self.w_v), e)

    def pairwise(self, f: Tensor, e: Tensor) -> Tensor:
        """Influence for every ordered pair: ``(B, N, D), (B, N, N, K) -> (B, N, N, out)``."""
        B, N, _ = f.shape
        au = ad.matmul(f, self.w_u)
        av = au if self.tied else ad.matmul(f, self.w_v)
        H = au.shape[-1]
        node_part = au.reshape(B, N, 1, H) + av.reshape(B, 1, N, H)
        return self._first(node_part, e)


@dataclass
class BlockParams:
    phi_edge: InfluenceMLP
    psi_edge: MLP
    phi_node: InfluenceMLP
    psi_node: MLP

    def named_parameters(self, prefix=""):
        return (self.phi_edge.named_parameters(prefix + "phi_edge.")
                + self.psi_edge.named_parameters(prefix + "psi_edge.")
                + self.phi_node.named_parameters(prefix + "phi_node.")
                + self.psi_node.named_parameters(prefix + "psi_node."))

    def parameters(self):
        return [t for _, t in self.named_parameters()]


@dataclass(frozen=True)
class BlockOptions:
    # count B_ij in both sums of the edge aggregation, as the formula is written
    double_count: bool = True
    # restrict N(i) to pairs with a nonzero edge attribute
    mask_zero_pairs: bool = False
    # divide neighbor sums by N-1 so their scale does not grow with graph size
    mean_aggregate: bool = False


def _offdiag(n: int) -> np.ndarray:
    return (1.0 - np.eye(n))[None, :, :, None]


def _neighbor_mask(e: Tensor, opts: BlockOptions) -> np.ndarray:
    n = e.shape[1]
    mask = _offdiag(n)
    if opts.mask_zero_pairs:
        mask = mask * np.any(e.data != 0, axis=-1, keepdims=True)
    if opts.mean_aggregate and n > 1:
        mask = mask / (n - 1)
    return mask


def _tile_context(c: Tensor, lead: tuple) -> Tensor:
    B, width = c.shape
    shaped = c.reshape((B,) + (1,) * (len(lead) - 1) + (width,))
    return ad.broadcast_to(shaped, tuple(lead) + (width,))


def edge_aggregate(phi: InfluenceMLP, f: Tensor, e: Tensor, opts: BlockOptions = BlockOptions()) -> Tensor:
    """zeta[i, j] = sum_{k1 in N(i)} phi(B_i,k1) + sum_{k2 in N(j)} phi(B_k2,j)."""
    B, N, _ = f.shape
    infl = phi.pairwise(f, e) * _neighbor_mask(e, opts)
    q = infl.shape[-1]
    out_sum = infl.sum(axis=2).reshape(B, N, 1, q)
    in_sum = infl.sum(axis=1).reshape(B, 1, N, q)
    zeta = out_sum + in_sum
    if not opts.double_count:
        zeta = zeta - infl
    return zeta


def node_aggregate(phi: InfluenceMLP, f: Tensor, e: Tensor, opts: BlockOptions = BlockOptions()) -> Tensor:
    """agg[i] = sum_{j in N(i)} phi(B_ij)."""
    return (phi.pairwise(f, e) * _neighbor_mask(e, opts)).sum(axis=2)


def block_forward(params: BlockParams, f_s: Tensor, e_s: Tensor, f_0: Tensor, e_0: Tensor,
                  context: Tensor, undirected: bool = True,
                  opts: BlockOptions = BlockOptions()) -> tuple[Tensor, Tensor]:
    """Map (F_s, E_s) to (F_{s+1}, E_{s+1}); both paths read only block-s and input attributes."""
    f_s, e_s, f_0, e_0, context = (ad.as_tensor(t) for t in (f_s, e_s, f_0, e_0, context))
    if f_s.shape != f_0.shape or e_s.shape != e_0.shape:
        raise ShapeError(f"block input {f_s.shape}/{e_s.shape} vs skip input {f_0.shape}/{e_0.shape}")
    B, N, D = f_s.shape
    if e_s.shape[:3] != (B, N, N):
        raise ShapeError(f"edge tensor {e_s.shape} does not match node matrix {f_s.shape}")
    has_ctx = context.shape[-1] > 0

    zeta = edge_aggregate(params.phi_edge, f_s, e_s, opts)
    parts = [e_0, zeta]
    if has_ctx:
        parts.append(_tile_context(context, (B, N, N)))
    y = params.psi_edge(ad.concat(parts, axis=-1))
    if undirected:
        # compute each unordered pair once and mirror it
        upper = np.triu(np.ones((N, N)), 1)[None, :, :, None]
        yu = y * upper
        e_next = yu + yu.swapaxes(1, 2)
    else:
        e_next = y * _offdiag(N)

    agg = node_aggregate(params.phi_node, f_s, e_s, opts)
    parts = [f_0, agg]
    if has_ctx:
        parts.append(_tile_context(context, (B, N)))
    f_next = params.psi_node(ad.concat(parts, axis=-1))
    return f_next, e_next


# graph-level operations

def _batch1(g: Graph) -> tuple[Tensor, Tensor]:
    return Tensor(g.f[None]), Tensor(g.e[None])


def _ctx(context) -> Tensor:
    c = np.zeros(0) if context is None else np.asarray(context, dtype=np.float64).reshape(-1)
    return Tensor(c[None])


def pair_features(g: Graph, u: int, v: int) -> np.ndarray:
    if u == v:
        raise SelfPairError(f"pair ({u}, {v}) is a self pair")
    if not (0 <= u < g.n and 0 <= v < g.n):
        raise IndexError(f"pair ({u}, {v}) outside 0..{g.n - 1}")
    return np.concatenate([g.f[u], g.e[u, v], g.f[v]])


def influence(mlp: InfluenceMLP, b) -> np.ndarray:
    return mlp(np.asarray(b, dtype=np.float64)).data


def aggregate_edge_influence(g: Graph, phi_edge: InfluenceMLP, i: int, j: int,
                             opts: BlockOptions = BlockOptions()) -> np.ndarray:
    if i == j:
        raise SelfPairError(f"pair ({i}, {j}) is a self pair")
    f, e = _batch1(g)
    return edge_aggregate(phi_edge, f, e, opts).data[0, i, j]


def aggregate_node_influence(g: Graph, phi_node: InfluenceMLP, i: int,
                             opts: BlockOptions = BlockOptions()) -> np.ndarray:
    if not 0 <= i < g.n:
        raise IndexError(f"node {i} outside 0..{g.n - 1}")
    f, e = _batch1(g)
    return node_aggregate(phi_node, f, e, opts).data[0, i]


def update_edge(psi_edge: MLP, e0_ij, zeta, context=None) -> np.ndarray:
    c = np.zeros(0) if context is None else np.asarray(context, dtype=np.float64)
    return psi_edge(np.concatenate([np.atleast_1d(e0_ij), np.atleast_1d(zeta), c])).data


def update_node(psi_node: MLP, f0_i, agg, context=None) -> np.ndarray:
    c = np.zeros(0) if context is None else np.asarray(context, dtype=np.float64)
    return psi_node(np.concatenate([np.atleast_1d(f0_i), np.atleast_1d(agg), c])).data


def run_block(g_s: Graph, g_0: Graph, params: BlockParams, context=None,
              opts: BlockOptions = BlockOptions()) -> Graph:
    if (g_s.n, g_s.d, g_s.k) != (g_0.n, g_0.d, g_0.k):
        raise ShapeError(f"block input dims {(g_s.n, g_s.d, g_s.k)} vs skip input {(g_0.n, g_0.d, g_0.k)}")
    f_s, e_s = _batch1(g_s)
    f_0, e_0 = _batch1(g_0)
    f, e = block_forward(params, f_s, e_s, f_0, e_0, _ctx(context), g_0.undirected, opts)
    return Graph(f.data[0], e.data[0], g_0.undirected)
