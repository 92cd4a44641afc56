"""Loss assembly, optimizers and the training loop."""
from __future__ import annotations

import logging
import math
from dataclasses import asdict, dataclass, field, fields

import numpy as np

from . import autodiff as ad
from .autodiff import ShapeError, Tensor
from .graph import Dataset, Graph, GraphPair
from .model import ModelConfig, ModelParams, forward_batch, init_model
from .spectral import block_reg

log = logging.getLogger(__name__)


class TrainingAbort(RuntimeError):
    pass


@dataclass(frozen=True)
class OptimizerConfig:
    algorithm: str = "adam"
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    epochs: int = 200
    batch_size: int = 16
    shuffle_seed: int = 0
    # separate step size for the Chebyshev coefficients; None means ``lr``
    theta_lr: float | None = None
    # "cosine" anneals every step size from its base value toward zero over the run
    schedule: str = "constant"

    def __post_init__(self):
        if self.algorithm not in ("adam", "sgd"):
            raise ValueError(f"unknown optimizer {self.algorithm!r}")
        if self.schedule not in ("constant", "cosine"):
            raise ValueError(f"unknown schedule {self.schedule!r}")
        if self.lr <= 0 or (self.theta_lr is not None and self.theta_lr <= 0):
            raise ValueError("learning rate must be positive")
        if not (0 <= self.beta1 < 1 and 0 <= self.beta2 < 1):
            raise ValueError("Adam betas must lie in [0, 1)")
        if self.epochs < 0 or self.batch_size < 1:
            raise ValueError("epochs must be >= 0 and batch_size >= 1")

    def to_dict(self) -> dict:
        return asdict(self)

    def scale_at(self, epoch: int) -> float:
        """Step-size multiplier for a 0-based epoch."""
        if self.schedule == "constant" or self.epochs == 0:
            return 1.0
        return 0.5 * (1.0 + math.cos(math.pi * epoch / self.epochs))

    def lr_for(self, name: str) -> float:
        if name == "theta" and self.theta_lr is not None:
            return self.theta_lr
        return self.lr

    @classmethod
    def from_dict(cls, d: dict) -> "OptimizerConfig":
        unknown = set(d) - {f.name for f in fields(cls)}
        if unknown:
            raise ValueError(f"unknown optimizer config keys: {sorted(unknown)}")
        return cls(**d)


@dataclass
class TrainState:
    model: ModelParams
    m: list[np.ndarray]
    v: list[np.ndarray]
    step: int = 0
    lr_scale: float = 1.0
    history: list[dict] = field(default_factory=list)

    @classmethod
    def fresh(cls, model: ModelParams) -> "TrainState":
        ps = model.parameters()
        return cls(model, [np.zeros(p.shape) for p in ps], [np.zeros(p.shape) for p in ps])


# losses

def supervised_loss(pred, target):
    """MSE over all edge entries plus MSE over all node entries."""
    if isinstance(pred, Graph) and isinstance(target, Graph):
        if pred.e.shape != target.e.shape or pred.f.shape != target.f.shape:
            raise ShapeError(f"prediction {pred.e.shape}/{pred.f.shape} vs target {target.e.shape}/{target.f.shape}")
        return float(np.mean((pred.e - target.e) ** 2) + np.mean((pred.f - target.f) ** 2))
    (pf, pe), (tf, te) = pred, target
    return ad.mse(pe, te) + ad.mse(pf, tf)


def _per_pair_supervised(f: Tensor, e: Tensor, tf: np.ndarray, te: np.ndarray) -> Tensor:
    if f.shape != tf.shape or e.shape != te.shape:
        raise ShapeError(f"prediction {e.shape}/{f.shape} vs target {te.shape}/{tf.shape}")
    de = ad.square(e - te).mean(axis=(1, 2, 3))
    df = ad.square(f - tf).mean(axis=(1, 2))
    return de + df


def _stack(pairs: list[GraphPair]):
    f0 = np.stack([p.input.f for p in pairs])
    e0 = np.stack([p.input.e for p in pairs])
    c = np.stack([p.context for p in pairs])
    tf = np.stack([p.target.f for p in pairs])
    te = np.stack([p.target.e for p in pairs])
    return f0, e0, c, tf, te


def batch_loss(model: ModelParams, pairs: list[GraphPair], beta: float | None = None):
    """Mean over pairs of (supervised + beta * regularization).

    Returns ``(loss_tensor, mean_supervised, mean_reg)`` where ``mean_reg`` is
    the unweighted regularizer (0.0 when beta == 0, where it is skipped).
    """
    cfg = model.config
    beta = cfg.beta if beta is None else beta
    if beta < 0:
        raise ValueError("beta must be >= 0")
    groups: dict[int, list[GraphPair]] = {}
    for p in pairs:
        groups.setdefault(p.input.n, []).append(p)
    sup_sum = reg_sum = None
    for _, grp in sorted(groups.items()):
        f0, e0, c, tf, te = _stack(grp)
        outs = forward_batch(model, f0, e0, c)
        f_s, e_s = outs[-1]
        sup = _per_pair_supervised(f_s, e_s, tf, te).sum()
        sup_sum = sup if sup_sum is None else sup_sum + sup
        if beta > 0:
            reg = None
            for s, (f, e) in enumerate(outs):
                term = block_reg(f, e, model.theta[s], cfg.spectral, block=s)
                reg = term if reg is None else reg + term
            reg = reg.sum()
            reg_sum = reg if reg_sum is None else reg_sum + reg
    n = len(pairs)
    sup_mean = ad.scalar_mul(sup_sum, 1.0 / n)
    if beta > 0:
        reg_mean = ad.scalar_mul(reg_sum, 1.0 / n) + ad.norm(model.theta, axis=1).sum()
        loss = sup_mean + ad.scalar_mul(reg_mean, beta)
        return loss, float(sup_mean.data), float(reg_mean.data)
    return sup_mean, float(sup_mean.data), 0.0


def total_loss(model: ModelParams, pair: GraphPair, beta: float | None = None) -> Tensor:
    """supervised_loss(final block, target) + beta * total_reg(all blocks, theta)."""
    return batch_loss(model, [pair], beta)[0]


# optimizers

def _check_finite(grads, names):
    for g, name in zip(grads, names):
        if not np.all(np.isfinite(g)):
            raise TrainingAbort(f"non-finite gradient in {name}")


def adam_step(state: TrainState, grads: list[np.ndarray], config: OptimizerConfig) -> TrainState:
    """One bias-corrected Adam update, in place; returns ``state``."""
    named = state.model.named_parameters()
    _check_finite(grads, [n for n, _ in named])
    state.step += 1
    t = state.step
    b1, b2 = config.beta1, config.beta2
    bc1 = 1.0 - b1 ** t
    bc2 = 1.0 - b2 ** t
    for i, ((name, p), g) in enumerate(zip(named, grads)):
        state.m[i] = b1 * state.m[i] + (1.0 - b1) * g
        state.v[i] = b2 * state.v[i] + (1.0 - b2) * (g * g)
        m_hat = state.m[i] / bc1
        v_hat = state.v[i] / bc2
        p.data = p.data - state.lr_scale * config.lr_for(name) * m_hat / (np.sqrt(v_hat) + config.eps)
    return state


def sgd_step(state: TrainState, grads: list[np.ndarray], config: OptimizerConfig) -> TrainState:
    named = state.model.named_parameters()
    _check_finite(grads, [n for n, _ in named])
    state.step += 1
    for (name, p), g in zip(named, grads):
        p.data = p.data - state.lr_scale * config.lr_for(name) * g
    return state


def compute_grads(model: ModelParams, pairs, beta=None):
    params = model.parameters()
    ad.zero_grad(params)
    loss, sup, reg = batch_loss(model, pairs, beta)
    ad.backward(loss)
    grads = [np.zeros(p.shape) if p.grad is None else p.grad for p in params]
    ad.zero_grad(params)
    return grads, float(loss.data), sup, reg


def train(dataset: Dataset, model_config: ModelConfig | None = None,
          opt_config: OptimizerConfig | None = None, model: ModelParams | None = None,
          on_epoch=None) -> TrainState:
    """Shuffled mini-batch training; deterministic given the two configs."""
    if len(dataset) == 0:
        raise ValueError("cannot train on an empty dataset")
    opt_config = opt_config or OptimizerConfig()
    if model is None:
        model = init_model(model_config or ModelConfig())
    state = TrainState.fresh(model)
    step_fn = adam_step if opt_config.algorithm == "adam" else sgd_step
    rng = np.random.default_rng(opt_config.shuffle_seed)
    pairs = list(dataset.pairs)
    bs = opt_config.batch_size
    for epoch in range(opt_config.epochs):
        order = rng.permutation(len(pairs))
        state.lr_scale = opt_config.scale_at(epoch)
        sums = np.zeros(3)
        for start in range(0, len(pairs), bs):
            batch = [pairs[i] for i in order[start:start + bs]]
            grads, loss, sup, reg = compute_grads(model, batch)
            if not np.isfinite(loss):
                raise TrainingAbort(f"non-finite loss at epoch {epoch}")
            step_fn(state, grads, opt_config)
            sums += np.array([sup, reg, loss]) * len(batch)
        sup, reg, tot = sums / len(pairs)
        rec = {"epoch": epoch + 1, "supervised": float(sup), "regularization": float(reg),
               "total": float(tot)}
        state.history.append(rec)
        log.debug("epoch %d supervised %.6g reg %.6g total %.6g", epoch + 1, sup, reg, tot)
        if on_epoch is not None:
            on_epoch(state, rec)
    return state
