"""Makeup transfer and interpolation built on the linear prior."""

from __future__ import annotations

import numpy as np

from makeupprior.errors import DimensionError
from makeupprior.prior import Coefficients, PcaPrior, decode
from makeupprior.uvtex import MakeupLayer, UvMap, compose_alpha_blend


def transfer(prior: PcaPrior, coeffs: Coefficients, bare_new: UvMap) -> UvMap:
    """Apply the makeup encoded by ``coeffs`` to another bare-skin albedo."""
    return compose_alpha_blend(decode(prior, coeffs), bare_new)


def _same_length(*vectors: Coefficients):
    lengths = {v.k for v in vectors}
    if len(lengths) != 1:
        raise DimensionError(f"coefficient vectors have different lengths: {sorted(lengths)}")


def lerp_coeffs(a: Coefficients, b: Coefficients, t: float) -> Coefficients:
    _same_length(a, b)
    return Coefficients((1.0 - t) * a.values + t * b.values)


def mix_coeffs(a: Coefficients, b: Coefficients, take_from_b) -> Coefficients:
    """Take ``b``'s entries where ``take_from_b`` is set, ``a``'s elsewhere.

    This is the linear-prior counterpart of layer-wise style mixing: callers
    pick which coefficient indices (e.g. an index range) follow ``b``.
    """
    _same_length(a, b)
    mask = np.asarray(take_from_b, dtype=bool)
    if mask.shape != (a.k,):
        raise DimensionError(f"mask has shape {mask.shape}, expected ({a.k},)")
    return Coefficients(np.where(mask, b.values, a.values))


def bilerp_coeffs(
    c00: Coefficients,
    c01: Coefficients,
    c10: Coefficients,
    c11: Coefficients,
    u: float,
    v: float,
) -> Coefficients:
    """Bilinear blend of four corner styles; ``cUV`` sits at ``(u, v)``."""
    _same_length(c00, c01, c10, c11)
    out = (
        (1.0 - u) * (1.0 - v) * c00.values
        + (1.0 - u) * v * c01.values
        + u * (1.0 - v) * c10.values
        + u * v * c11.values
    )
    return Coefficients(out)


def _lerp(x: np.ndarray, y: np.ndarray, t: float) -> np.ndarray:
    # equal inputs stay bit-identical for every t
    return np.where(x == y, x, (1.0 - t) * x + t * y)


def fade_alpha(layer: MakeupLayer, t: float) -> MakeupLayer:
    """Scale the alpha matte by ``t``, leaving the bases untouched."""
    if not 0.0 <= t <= 1.0:
        raise ValueError(f"t must lie in [0, 1], got {t}")
    return MakeupLayer(layer.bases, UvMap(layer.alpha.values * t))


def lerp_layers(a: MakeupLayer, b: MakeupLayer, t: float) -> MakeupLayer:
    """Pixelwise blend of two layers' bases and alpha mattes."""
    if (a.width, a.height) != (b.width, b.height):
        raise DimensionError(f"layer sizes differ: {a.width}x{a.height} vs {b.width}x{b.height}")
    bases = _lerp(a.bases.values, b.bases.values, t)
    alpha = np.clip(_lerp(a.alpha.values, b.alpha.values, t), 0.0, 1.0)
    return MakeupLayer(UvMap(bases), UvMap(alpha))
