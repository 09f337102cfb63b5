"""
Measuring a result against a reference
======================================

RMSE and SSIM are taken over the face; HM compares colour distributions
inside the grown eye region and the lips.
"""

import numpy as np

from makeupprior import build_pca, compose_alpha_blend, evaluate, regions_from_labels, sample, transfer
from makeupprior.synthetic import SyntheticSpec, generate

corpus = generate(SyntheticSpec(seed=0, count=10, size=64))
prior = build_pca(corpus.layers, k=100)
regions = regions_from_labels(corpus.labels)
print("pixels: face", regions.face.count, "eyes", regions.eyes.count, "lips", regions.lips.count)

reference = compose_alpha_blend(corpus.layers[0], corpus.bares[0])

for name, result in [
    ("same image", reference),
    ("other style", compose_alpha_blend(corpus.layers[1], corpus.bares[0])),
    ("random style", transfer(prior, sample(prior, seed=3), corpus.bares[0])),
    ("no makeup", corpus.bares[0]),
]:
    scores = {f"{r['metric']}:{r['region']}": round(r["value"], 4) for r in evaluate(result, reference, regions)}
    print(f"{name:13s}", scores)
