"""Check the hand-written reverse-mode gradients of the whole model.

Small model, one graph pair, regularizer switched on; every parameter is
compared with central differences.
"""
import numpy as np

from magtrans import autodiff as ad
from magtrans.graph import Graph, GraphPair
from magtrans.model import ModelConfig, init_model
from magtrans.training import batch_loss


def random_graph(rng, n):
    a = np.triu((rng.random((n, n)) < 0.5).astype(float), 1)
    return Graph(rng.normal(size=(n, 1)), (a + a.T)[:, :, None])


rng = np.random.default_rng(1)
cfg = ModelConfig(blocks=2, cheb_order=3, beta=1e-3, influence_hidden=(4,), update_hidden=(4,),
                  edge_influence_dim=3, node_influence_dim=3)
model = init_model(cfg, rng)
pair = GraphPair(random_graph(rng, 4), random_graph(rng, 4))
print(f"{model.parameter_count()} parameters")
err = ad.grad_check(lambda ps: batch_loss(model, [pair], cfg.beta)[0], model.parameters())
print(f"max relative error vs central differences: {err:.2e}")
