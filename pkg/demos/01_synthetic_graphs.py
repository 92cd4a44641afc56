"""Build a Syn-I style dataset and look at what the translation asks for.

Inputs are Erdos-Renyi graphs; a target edge exists wherever the input
graph has a path of length at most two, and each target node carries
its target degree plus five.
"""
import numpy as np

from magtrans.synth import density, hop_distances, make_dataset, preset, summarize

ds = make_dataset(preset("I", pairs=50))
print("summary:", summarize(ds))

pair = ds.pairs[0]
adj = pair.input.e[:, :, 0] > 0
dist = hop_distances(adj)
print(f"first pair: input density {density(pair.input):.3f}, target density {density(pair.target):.3f}")
print("node 0 hop distances:", dist[0].tolist())
print("node 0 target neighbors:", np.flatnonzero(pair.target.e[0, :, 0]).tolist())
print("target F[:5] =", pair.target.f[:5, 0].tolist(), " degrees:", pair.target.degrees()[:5].tolist())
