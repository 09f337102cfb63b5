"""
Building a makeup prior
=======================

Generate a small synthetic corpus, fit the PCA prior, and look at how much
of the style variation each component carries.
"""

import tempfile
from pathlib import Path

import numpy as np

from makeupprior import build_pca, decode, load_model, project, sample, save_model
from makeupprior.synthetic import SyntheticSpec, generate

# ten 64x64 styles: mirrored eyeshadow blobs plus a lip ellipse
corpus = generate(SyntheticSpec(seed=0, count=10, size=64))
print("styles:", len(corpus.layers), "grid:", corpus.layers[0].width, "x", corpus.layers[0].height)

# ten samples span at most nine directions around their mean
prior = build_pca(corpus.layers, k=100)
print("components kept:", prior.k)

share = prior.stddevs.astype(float) ** 2
print("variance share per component:", np.round(share / share.sum(), 3))

# every training style sits inside the subspace
layer = corpus.layers[3]
back = decode(prior, project(prior, layer))
print("reconstruction error:", np.max(np.abs(back.rgba() - layer.rgba())))

# a random style: coefficients drawn with the per-component spread
style = sample(prior, seed=11, scale=0.5)
print("sampled coefficients:", np.round(style.values, 2))

# the model is a manifest plus a raw float32 payload
with tempfile.TemporaryDirectory() as tmp:
    save_model(prior, Path(tmp) / "model")
    again = load_model(Path(tmp) / "model")
    print("reload identical:", np.array_equal(again.basis, prior.basis))
