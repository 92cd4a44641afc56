"""Spectral graph regularization with a learnable Chebyshev-filtered Laplacian.

For each generated block and edge channel the node attributes are scored
by the quadratic form ``F^T g(L~) F`` where ``L~`` is the rescaled
normalized Laplacian of that channel and ``g`` a normalized Chebyshev
expansion with coefficients ``theta[s, :, k]``. The coefficients are
further penalized with an L2,1 norm over (block, channel) groups.

Functions accept numpy arrays or autodiff tensors. Given plain arrays they
return plain arrays / floats; given any tensor they return a tensor so the
result can be backpropagated. Leading batch axes are allowed throughout.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from . import autodiff as ad
from .autodiff import ShapeError, Tensor
from .graph import Graph


class SymmetryError(ValueError):
    pass


class DegenerateNormalizationError(ArithmeticError):
    def __init__(self, total: float, block: int | None = None, channel: int | None = None):
        where = "" if block is None else f" at block {block}, channel {channel}"
        super().__init__(f"Chebyshev coefficient sum {total!r} too close to zero{where}")
        self.total = total
        self.block = block
        self.channel = channel


class SpectralDomainWarning(RuntimeWarning):
    pass


@dataclass(frozen=True)
class SpectralConfig:
    order: int = 3  # P
    lambda_max: float | None = 1.5  # None: exact largest eigenvalue per graph
    eps_degree: float = 1e-6
    eps_norm: float = 1e-8

    def __post_init__(self):
        if self.order < 1:
            raise ValueError("Chebyshev order must be >= 1")
        if self.eps_degree <= 0 or self.eps_norm <= 0:
            raise ValueError("eps values must be positive")


DEFAULT = SpectralConfig()


def _wrap(*xs):
    tensor_in = any(isinstance(x, Tensor) for x in xs)
    return tensor_in, [ad.as_tensor(x) for x in xs]


def _ret(t: Tensor, tensor_in: bool):
    if tensor_in:
        return t
    return float(t.data) if t.ndim == 0 else t.data


def _check_symmetric(e: np.ndarray) -> None:
    if e.shape[-1] != e.shape[-2]:
        raise ShapeError(f"edge matrix must be square, got {e.shape}")
    if not np.allclose(e, np.swapaxes(e, -1, -2), rtol=0.0, atol=1e-12):
        raise SymmetryError("edge matrix is not symmetric")


def _eye(n: int) -> np.ndarray:
    return np.eye(n)


def _laplacian(e: Tensor) -> tuple[Tensor, Tensor]:
    deg = e.sum(axis=-1)
    n = e.shape[-1]
    lap = ad.reshape(deg, deg.shape + (1,)) * _eye(n) - e
    return lap, deg


def laplacian(e_k):
    """L = diag(rowsum(E)) - E for one edge channel."""
    tensor_in, (e,) = _wrap(e_k)
    _check_symmetric(e.data)
    return _ret(_laplacian(e)[0], tensor_in)


def _normalized(e: Tensor, cfg: SpectralConfig, assert_nonnegative: bool = False) -> Tensor:
    lap, deg = _laplacian(e)
    if assert_nonnegative and np.any(deg.data < -cfg.eps_degree):
        warnings.warn("negative degree encountered; normalization uses the floored value",
                      SpectralDomainWarning, stacklevel=3)
    inv_sqrt = ad.power(ad.clamp_min(deg, cfg.eps_degree), -0.5)
    col = ad.reshape(inv_sqrt, inv_sqrt.shape + (1,))
    row = ad.reshape(inv_sqrt, inv_sqrt.shape[:-1] + (1, inv_sqrt.shape[-1]))
    return col * lap * row


def normalized_laplacian(e_k, config: SpectralConfig = DEFAULT, assert_nonnegative: bool = False):
    """D^-1/2 L D^-1/2 with each degree floored at ``eps_degree``."""
    tensor_in, (e,) = _wrap(e_k)
    _check_symmetric(e.data)
    return _ret(_normalized(e, config, assert_nonnegative), tensor_in)


def _scaled(lhat: Tensor, lambda_max) -> Tensor:
    n = lhat.shape[-1]
    if lambda_max is None:
        # exact per-graph value; treated as a constant
        lam = np.linalg.eigvalsh(lhat.data)[..., -1]
        lam = np.where(lam > 0, lam, 1.0)[..., None, None]
        return ad.mul(lhat, 2.0 / lam) - _eye(n)
    return ad.scalar_mul(lhat, 2.0 / lambda_max) - _eye(n)


def scaled_laplacian(lhat, lambda_max: float | None = 1.5):
    """2 L^ / lambda_max - I."""
    tensor_in, (lh,) = _wrap(lhat)
    if lh.shape[-1] != lh.shape[-2]:
        raise ShapeError(f"Laplacian must be square, got {lh.shape}")
    return _ret(_scaled(lh, lambda_max), tensor_in)


def _coef_sum(theta: Tensor, eps_norm: float, block=None, channel=None) -> Tensor:
    total = theta.sum(axis=-1)
    if np.any(np.abs(total.data) <= eps_norm):
        raise DegenerateNormalizationError(float(np.min(np.abs(total.data))), block, channel)
    return total


def chebyshev_filter(lt, theta, eps_norm: float = DEFAULT.eps_norm):
    """sum_p theta_p T_p(L~) / sum_p theta_p, with T_1 = I and T_2 = L~."""
    tensor_in, (L, th) = _wrap(lt, theta)
    if th.ndim != 1:
        raise ShapeError(f"theta must be a vector, got {th.shape}")
    total = _coef_sum(th, eps_norm)
    n = L.shape[-1]
    t_prev, t_cur = None, Tensor(np.broadcast_to(_eye(n), L.shape))
    acc = t_cur * th[0]
    for p in range(1, th.shape[0]):
        if p == 1:
            t_next = L
        else:
            t_next = ad.scalar_mul(ad.matmul(L, t_cur), 2.0) - t_prev
        t_prev, t_cur = t_cur, t_next
        acc = acc + t_cur * th[p]
    return _ret(acc / total, tensor_in)


def _filtered_quadratic(lt: Tensor, f: Tensor, theta: Tensor, total: Tensor) -> Tensor:
    """sum over columns d of f_d^T g(L~) f_d, via the recurrence on T_p(L~) f."""
    x_prev, x_cur = None, f
    acc = (f * x_cur).sum(axis=(-2, -1)) * theta[0]
    for p in range(1, theta.shape[0]):
        if p == 1:
            x_next = ad.matmul(lt, f)
        else:
            x_next = ad.scalar_mul(ad.matmul(lt, x_cur), 2.0) - x_prev
        x_prev, x_cur = x_cur, x_next
        acc = acc + (f * x_cur).sum(axis=(-2, -1)) * theta[p]
    return acc / total


def block_reg(f: Tensor, e: Tensor, theta_s: Tensor, cfg: SpectralConfig,
              block: int | None = None) -> Tensor:
    """Per-graph value, shape = leading batch axes of ``f``."""
    K = e.shape[-1]
    if theta_s.shape != (cfg.order, K):
        raise ShapeError(f"theta slice {theta_s.shape} does not match {K} edge channels")
    out = None
    for k in range(K):
        th = theta_s[:, k]
        total = _coef_sum(th, cfg.eps_norm, block, k)
        lt = _scaled(_normalized(e[..., k], cfg), cfg.lambda_max)
        term = _filtered_quadratic(lt, f, th, total)
        out = term if out is None else out + term
    return out


def _config_for(theta_shape, config):
    if config is None:
        return SpectralConfig(order=theta_shape[0])
    if config.order != theta_shape[0]:
        raise ShapeError(f"theta has order {theta_shape[0]}, config says {config.order}")
    return config


def reg_quadratic(g, theta_s, config: SpectralConfig | None = None):
    """sum_k sum_d F_d^T g_theta(L~_k) F_d for one graph (or a batch).

    ``g`` is a :class:`Graph` or a tuple ``(F, E)``; ``theta_s`` is P x K.
    """
    f, e = (g.f, g.e) if isinstance(g, Graph) else g
    tensor_in, (f, e, th) = _wrap(f, e, theta_s)
    cfg = _config_for(th.shape, config)
    return _ret(block_reg(f, e, th, cfg), tensor_in)


def classic_laplacian_identity_check(e_k, f_d) -> tuple[float, float]:
    """Return (F^T L F, sum over ordered pairs E_ij (F_i - F_j)^2).

    For symmetric E the first equals half the second.
    """
    e = np.asarray(e_k, dtype=np.float64)
    fv = np.asarray(f_d, dtype=np.float64).reshape(-1)
    _check_symmetric(e)
    lap = np.diag(e.sum(axis=1)) - e
    quad = float(fv @ lap @ fv)
    diff = fv[:, None] - fv[None, :]
    pairwise = float(np.sum(e * diff * diff))
    assert abs(quad - 0.5 * pairwise) <= 1e-9 * max(1.0, abs(quad)), (quad, pairwise)
    return quad, pairwise


def freq_reg(theta):
    """L2,1 norm: sum over (block, channel) of ||theta[s, :, k]||_2."""
    tensor_in, (th,) = _wrap(theta)
    if th.ndim != 3:
        raise ShapeError(f"theta must be S x P x K, got {th.shape}")
    return _ret(ad.norm(th, axis=1).sum(), tensor_in)


def total_reg(generated, theta, config: SpectralConfig | None = None):
    """sum_s reg_quadratic(generated[s], theta[s]) + freq_reg(theta).

    ``generated`` lists the S block outputs, each a Graph or ``(F, E)``.
    """
    gens = [(g.f, g.e) if isinstance(g, Graph) else g for g in generated]
    tensor_in = isinstance(theta, Tensor) or any(isinstance(x, Tensor) for fe in gens for x in fe)
    th = ad.as_tensor(theta)
    if th.ndim != 3 or len(gens) != th.shape[0]:
        raise ShapeError(f"{len(gens)} generated graphs but theta has shape {th.shape}")
    cfg = _config_for(th.shape[1:], config)
    out = None
    for s, (f, e) in enumerate(gens):
        term = block_reg(ad.as_tensor(f), ad.as_tensor(e), th[s], cfg, block=s)
        out = term if out is None else out + term
    return _ret(out + ad.norm(th, axis=1).sum(), tensor_in)
