"""
Recovering makeup from an albedo and moving it to another face
==============================================================
"""

import numpy as np

from makeupprior import (
    FitConfig,
    build_pca,
    compose_alpha_blend,
    cycle_check,
    decode,
    fit_coeffs,
    project,
    rmse,
    transfer,
    warm_start,
)
from makeupprior.synthetic import SyntheticSpec, generate

corpus = generate(SyntheticSpec(seed=0, count=10, size=64))
prior = build_pca(corpus.layers, k=100)
face = corpus.face

# a made-up albedo: style 2 composited over bare face 5
truth = project(prior, corpus.layers[2])
bare = corpus.bares[5]
target = compose_alpha_blend(decode(prior, truth), bare)

# the warm start reads a rough alpha off the colour change, then projects
init = warm_start(prior, bare, target)
result = fit_coeffs(prior, bare, target, face, FitConfig(), init)

first, best = result.history[0], result.history[result.best_iteration]
print(f"loss {first.total:.3f} -> {best.total:.4f} (best at step {result.best_iteration})")
print("largest coefficient error:", np.max(np.abs(result.coefficients.values - truth.values)))

# transfer the recovered style to a different face
moved = transfer(prior, result.coefficients, corpus.bares[8])
print("changed pixels on the new face:", int(np.any(moved.values != corpus.bares[8].values, axis=2).sum()))

# and check that refitting on that face gives the style back
report = cycle_check(prior, result.coefficients, corpus.bares[8], face, FitConfig(iterations=200))
print(f"cycle: coefficient MSE {report.coeff_distance:.2e}, composite RMSE {report.composite_rmse:.2e}")
print("fit RMSE:", rmse(compose_alpha_blend(decode(prior, result.coefficients), bare), target, face))
