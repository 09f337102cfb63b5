"""
Blending styles
===============

Coefficient interpolation moves between whole styles.  Mixing takes some
components from one style and the rest from another.  Fading only touches
the alpha matte.
"""

import numpy as np

from makeupprior import (
    bilerp_coeffs,
    build_pca,
    decode,
    fade_alpha,
    lerp_coeffs,
    lerp_layers,
    mix_coeffs,
    project,
    transfer,
)
from makeupprior.synthetic import SyntheticSpec, generate

corpus = generate(SyntheticSpec(seed=0, count=10, size=64))
prior = build_pca(corpus.layers, k=100)
styles = [project(prior, layer) for layer in corpus.layers[:4]]
bare = corpus.bares[0]

a, b = styles[0], styles[1]
for t in (0.0, 0.25, 0.5, 0.75, 1.0):
    out = transfer(prior, lerp_coeffs(a, b, t), bare)
    print(f"t={t:.2f} mean colour {np.round(out.values[corpus.face.bits].mean(axis=0), 3)}")

# the leading components from b, the tail from a
take = np.arange(prior.k) < 3
mixed = mix_coeffs(a, b, take)
print("mixed coefficients:", np.round(mixed.values, 2))

# four corner styles on a 3x3 grid
for u in (0.0, 0.5, 1.0):
    row = [bilerp_coeffs(*styles, u, v) for v in (0.0, 0.5, 1.0)]
    print(f"u={u}:", [round(float(np.linalg.norm(c.values)), 2) for c in row])

# fading keeps the colours and thins the matte
layer = decode(prior, a)
half = fade_alpha(layer, 0.5)
print("alpha max:", layer.alpha.values.max(), "->", half.alpha.values.max())

# pixel-space blend of two decoded layers
mid = lerp_layers(decode(prior, a), decode(prior, b), 0.5)
print("blended alpha mean:", mid.alpha.values[corpus.face.bits].mean())
