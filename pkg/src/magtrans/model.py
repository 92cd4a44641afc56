"""Stacking translation blocks into the full translator."""
from __future__ import annotations

from dataclasses import asdict, dataclass, field, fields

import numpy as np

from . import autodiff as ad
from .autodiff import ShapeError, Tensor
from .graph import Graph
from .paths import MLP, BlockOptions, BlockParams, InfluenceMLP, block_forward
from .spectral import SpectralConfig


@dataclass(frozen=True)
class ModelConfig:
    node_dim: int = 1  # D
    edge_dim: int = 1  # K
    context_dim: int = 0  # c
    blocks: int = 3  # S
    cheb_order: int = 3  # P
    edge_influence_dim: int = 16  # q
    node_influence_dim: int = 16  # h
    influence_hidden: tuple[int, ...] = (16, 16)
    update_hidden: tuple[int, ...] = (16, 16)
    hidden_activation: str = "tanh"
    influence_activation: str = "tanh"
    edge_output_activation: str = "sigmoid"
    node_output_activation: str = "identity"
    beta: float = 1e-4
    undirected: bool = True
    double_count: bool = True
    mask_zero_pairs: bool = False
    mean_aggregate: bool = False
    share_blocks: bool = False
    lambda_max: float | None = 1.5
    eps_degree: float = 1e-6
    eps_norm: float = 1e-8
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "influence_hidden", tuple(int(x) for x in self.influence_hidden))
        object.__setattr__(self, "update_hidden", tuple(int(x) for x in self.update_hidden))
        if self.blocks < 1:
            raise ValueError("need at least one block")
        if self.beta < 0:
            raise ValueError("beta must be >= 0")
        if min(self.node_dim, self.edge_dim) < 1 or self.context_dim < 0:
            raise ValueError("attribute widths must be positive")
        for act in (self.hidden_activation, self.influence_activation,
                    self.edge_output_activation, self.node_output_activation):
            if act not in ad.ACTIVATIONS:
                raise ValueError(f"unknown activation {act!r}")

    @property
    def spectral(self) -> SpectralConfig:
        return SpectralConfig(self.cheb_order, self.lambda_max, self.eps_degree, self.eps_norm)

    @property
    def block_options(self) -> BlockOptions:
        return BlockOptions(self.double_count, self.mask_zero_pairs, self.mean_aggregate)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["influence_hidden"] = list(self.influence_hidden)
        d["update_hidden"] = list(self.update_hidden)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ModelConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown model config keys: {sorted(unknown)}")
        return cls(**d)


@dataclass
class ModelParams:
    blocks: list[BlockParams]
    theta: Tensor  # S x P x K
    config: ModelConfig = field(default_factory=ModelConfig)

    def __post_init__(self):
        cfg = self.config
        if len(self.blocks) != cfg.blocks:
            raise ShapeError(f"{len(self.blocks)} blocks, config says {cfg.blocks}")
        if self.theta.shape != (cfg.blocks, cfg.cheb_order, cfg.edge_dim):
            raise ShapeError(f"theta shape {self.theta.shape} != {(cfg.blocks, cfg.cheb_order, cfg.edge_dim)}")

    @property
    def dims(self) -> dict:
        c = self.config
        return {"D": c.node_dim, "K": c.edge_dim, "c": c.context_dim, "q": c.edge_influence_dim,
                "h": c.node_influence_dim, "P": c.cheb_order, "S": c.blocks}

    def named_parameters(self) -> list[tuple[str, Tensor]]:
        out, seen = [], set()
        for s, blk in enumerate(self.blocks):
            for name, t in blk.named_parameters(f"block{s}."):
                if id(t) not in seen:
                    seen.add(id(t))
                    out.append((name, t))
        out.append(("theta", self.theta))
        return out

    def parameters(self) -> list[Tensor]:
        return [t for _, t in self.named_parameters()]

    def parameter_count(self) -> int:
        return sum(t.size for t in self.parameters())

    def flat(self) -> np.ndarray:
        return np.concatenate([t.data.reshape(-1) for t in self.parameters()])

    def load_flat(self, values: np.ndarray) -> None:
        values = np.asarray(values, dtype=np.float64)
        if values.size != self.parameter_count():
            raise ShapeError(f"{values.size} values for {self.parameter_count()} parameters")
        i = 0
        for t in self.parameters():
            t.data = values[i:i + t.size].reshape(t.shape).copy()
            i += t.size


def _init_block(cfg: ModelConfig, rng: np.random.Generator) -> BlockParams:
    D, K, c = cfg.node_dim, cfg.edge_dim, cfg.context_dim
    q, h = cfg.edge_influence_dim, cfg.node_influence_dim
    tied = cfg.undirected
    phi_e = InfluenceMLP.init(rng, D, K, cfg.influence_hidden, q, tied=tied,
                              hidden_act=cfg.hidden_activation, out_act=cfg.influence_activation)
    psi_e = MLP.init(rng, [K + q + c, *cfg.update_hidden, K],
                     hidden_act=cfg.hidden_activation, out_act=cfg.edge_output_activation)
    phi_n = InfluenceMLP.init(rng, D, K, cfg.influence_hidden, h, tied=tied,
                              hidden_act=cfg.hidden_activation, out_act=cfg.influence_activation)
    psi_n = MLP.init(rng, [D + h + c, *cfg.update_hidden, D],
                     hidden_act=cfg.hidden_activation, out_act=cfg.node_output_activation)
    return BlockParams(phi_e, psi_e, phi_n, psi_n)


def init_model(config: ModelConfig, rng: np.random.Generator | int | None = None) -> ModelParams:
    """Fresh parameters; deterministic given the generator (default: ``config.seed``)."""
    if rng is None:
        rng = config.seed
    if not isinstance(rng, np.random.Generator):
        rng = np.random.default_rng(rng)
    if config.share_blocks:
        blocks = [_init_block(config, rng)] * config.blocks
    else:
        blocks = [_init_block(config, rng) for _ in range(config.blocks)]
    P = config.cheb_order
    # positive entries keep every coefficient sum well away from zero at start
    theta = rng.uniform(0.5, 1.5, size=(config.blocks, P, config.edge_dim)) / P
    return ModelParams(blocks, Tensor(theta, requires_grad=True, name="theta"), config)


def expected_parameter_count(cfg: ModelConfig) -> int:
    """Closed-form parameter count (tied first-layer rows counted once)."""
    D, K, c = cfg.node_dim, cfg.edge_dim, cfg.context_dim

    def dense(sizes):
        return sum(a * b + b for a, b in zip(sizes[:-1], sizes[1:]))

    def influence(out):
        sizes = [*cfg.influence_hidden, out]
        node_rows = D if cfg.undirected else 2 * D
        return (node_rows + K) * sizes[0] + sizes[0] + dense(sizes)

    per_block = (influence(cfg.edge_influence_dim)
                 + dense([K + cfg.edge_influence_dim + c, *cfg.update_hidden, K])
                 + influence(cfg.node_influence_dim)
                 + dense([D + cfg.node_influence_dim + c, *cfg.update_hidden, D]))
    n_blocks = 1 if cfg.share_blocks else cfg.blocks
    return n_blocks * per_block + cfg.blocks * cfg.cheb_order * K


def forward_batch(model: ModelParams, f0, e0, context) -> list[tuple[Tensor, Tensor]]:
    """Run all S blocks on a batch ``(B,N,D), (B,N,N,K), (B,c)``; returns [(F_s, E_s)] for s=1..S."""
    f0, e0, context = ad.as_tensor(f0), ad.as_tensor(e0), ad.as_tensor(context)
    cfg = model.config
    if f0.shape[-1] != cfg.node_dim or e0.shape[-1] != cfg.edge_dim or context.shape[-1] != cfg.context_dim:
        raise ShapeError(f"inputs F{f0.shape} E{e0.shape} C{context.shape} do not match "
                         f"D={cfg.node_dim} K={cfg.edge_dim} c={cfg.context_dim}")
    opts = cfg.block_options
    out = []
    f, e = f0, e0
    for blk in model.blocks:
        f, e = block_forward(blk, f, e, f0, e0, context, cfg.undirected, opts)
        out.append((f, e))
    return out


def forward(model: ModelParams, g0: Graph, context=None) -> list[Graph]:
    """Generated graphs [g_1, ..., g_S]; the last one is the prediction."""
    c = np.zeros(0) if context is None else np.asarray(context, dtype=np.float64).reshape(-1)
    outs = forward_batch(model, g0.f[None], g0.e[None], c[None])
    return [Graph(f.data[0], e.data[0], g0.undirected) for f, e in outs]


def predict_batch(model: ModelParams, graphs: list[Graph], contexts=None) -> list[Graph]:
    """Final-block predictions for many graphs, batching graphs of equal size."""
    contexts = contexts if contexts is not None else [np.zeros(model.config.context_dim)] * len(graphs)
    result: list[Graph | None] = [None] * len(graphs)
    by_n: dict[int, list[int]] = {}
    for i, g in enumerate(graphs):
        by_n.setdefault(g.n, []).append(i)
    for n, idx in sorted(by_n.items()):
        f0 = np.stack([graphs[i].f for i in idx])
        e0 = np.stack([graphs[i].e for i in idx])
        c = np.stack([np.asarray(contexts[i], dtype=np.float64).reshape(-1) for i in idx])
        f, e = forward_batch(model, f0, e0, c)[-1]
        for row, i in enumerate(idx):
            result[i] = Graph(f.data[row], e.data[row], graphs[i].undirected)
    return result
