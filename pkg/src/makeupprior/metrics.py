"""Region-restricted image metrics: RMSE, SSIM and a histogram-matching distance.

Regions come from an integer label map with the following codes::

    0       background
    1       skin
    2, 3    left / right eyebrow
    4, 5    left / right eye
    6       nose
    7, 8, 9 upper lip, mouth interior, lower lip

The eye region (eyes + eyebrows) is grown by repeated square dilation so it
also covers eyeshadow.  HM is measured on the eye and lip regions, the other
metrics on the face region.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from makeupprior.errors import DimensionError, EmptyMaskError
from makeupprior.uvtex import FaceMask, UvMap

FACE_CODES = (1, 2, 3, 4, 5, 6, 7, 8, 9)
EYE_CODES = (2, 3, 4, 5)
LIP_CODES = (7, 8, 9)
DILATE_KERNEL = 15
DILATE_ITERATIONS = 3

SSIM_WINDOW = 11
SSIM_SIGMA = 1.5
SSIM_K1 = 0.01
SSIM_K2 = 0.03


@dataclass(frozen=True)
class RegionSet:
    face: FaceMask
    eyes: FaceMask
    lips: FaceMask


def _check_pair(a: UvMap, b: UvMap, mask: FaceMask):
    if a.shape != b.shape:
        raise DimensionError(f"image shapes differ: {a.shape} vs {b.shape}")
    if (mask.height, mask.width) != a.shape[:2]:
        raise DimensionError(f"mask is {(mask.height, mask.width)}, images are {a.shape[:2]}")
    if mask.count == 0:
        raise EmptyMaskError("mask selects no pixels")


def rmse(a: UvMap, b: UvMap, mask: FaceMask) -> float:
    """Root mean squared difference over masked pixels and all channels."""
    _check_pair(a, b, mask)
    diff = (a.values - b.values)[mask.bits]
    return float(np.sqrt(np.mean(diff * diff)))


def _gaussian_taps(size: int = SSIM_WINDOW, sigma: float = SSIM_SIGMA) -> np.ndarray:
    x = np.arange(size) - (size - 1) / 2.0
    taps = np.exp(-(x * x) / (2.0 * sigma * sigma))
    return taps / taps.sum()


def _window_mean(img: np.ndarray, taps: np.ndarray) -> np.ndarray:
    out = ndimage.correlate1d(img, taps, axis=0, mode="reflect")
    return ndimage.correlate1d(out, taps, axis=1, mode="reflect")


def ssim_map(a: np.ndarray, b: np.ndarray, data_range: float = 1.0) -> np.ndarray:
    """Per-pixel SSIM of two 2-D arrays with an 11x11 Gaussian window."""
    taps = _gaussian_taps()
    c1 = (SSIM_K1 * data_range) ** 2
    c2 = (SSIM_K2 * data_range) ** 2
    mu_a = _window_mean(a, taps)
    mu_b = _window_mean(b, taps)
    var_a = _window_mean(a * a, taps) - mu_a * mu_a
    var_b = _window_mean(b * b, taps) - mu_b * mu_b
    cov = _window_mean(a * b, taps) - mu_a * mu_b
    luminance = (2.0 * mu_a * mu_b + c1) / (mu_a * mu_a + mu_b * mu_b + c1)
    structure = (2.0 * cov + c2) / (var_a + var_b + c2)
    return luminance * structure


def ssim(a: UvMap, b: UvMap, mask: FaceMask) -> float:
    """Mean SSIM over channels and over windows centred on masked pixels."""
    _check_pair(a, b, mask)
    if min(a.height, a.width) < SSIM_WINDOW:
        raise DimensionError(f"image {a.height}x{a.width} is smaller than the {SSIM_WINDOW}x{SSIM_WINDOW} window")
    per_channel = [ssim_map(a.values[:, :, c], b.values[:, :, c])[mask.bits].mean() for c in range(a.channels)]
    return float(np.mean(per_channel))


def match_histogram(source: np.ndarray, reference: np.ndarray) -> np.ndarray:
    """Remap ``source`` values so their empirical CDF follows ``reference``.

    Each distinct source value is sent to the reference quantile at the same
    cumulative fraction, with linear interpolation between reference levels.
    """
    src_values, src_inverse, src_counts = np.unique(source, return_inverse=True, return_counts=True)
    ref_values, ref_counts = np.unique(reference, return_counts=True)
    src_quantiles = np.cumsum(src_counts) / source.size
    ref_quantiles = np.cumsum(ref_counts) / reference.size
    mapped = np.interp(src_quantiles, ref_quantiles, ref_values)
    return mapped[src_inverse].reshape(source.shape)


def hm_distance(a: UvMap, b: UvMap, mask: FaceMask) -> float:
    """Mean squared change needed to give ``a`` the colour histogram of ``b``.

    ``a``'s masked pixels are histogram-matched to ``b``'s masked pixels
    channel by channel, and the MSE between ``a`` and its matched version is
    averaged over channels.  Matching works on the exact sample values, which
    for 8-bit textures is the usual 256-bin CDF matching.
    """
    _check_pair(a, b, mask)
    va = a.values[mask.bits]
    vb = b.values[mask.bits]
    per_channel = []
    for c in range(a.channels):
        matched = match_histogram(va[:, c], vb[:, c])
        per_channel.append(np.mean((matched - va[:, c]) ** 2))
    return float(np.mean(per_channel))


def dilate(mask: FaceMask, kernel_size: int = DILATE_KERNEL, iterations: int = DILATE_ITERATIONS) -> FaceMask:
    """Binary dilation by a square structuring element, repeated.

    Pixels outside the grid count as empty.
    """
    if kernel_size < 1 or kernel_size % 2 == 0:
        raise ValueError(f"kernel_size must be a positive odd number, got {kernel_size}")
    if iterations < 0:
        raise ValueError(f"iterations must be >= 0, got {iterations}")
    bits = np.array(mask.bits)
    if iterations == 0 or not bits.any():
        return FaceMask(bits)
    structure = np.ones((kernel_size, kernel_size), dtype=bool)
    out = bits
    for _ in range(iterations):
        out = ndimage.binary_dilation(out, structure=structure, border_value=0)
    return FaceMask(out)


def regions_from_labels(labels: UvMap | np.ndarray) -> RegionSet:
    """Face, dilated eye, and lip masks from an integer-coded label map.

    ``labels`` is either an integer array or a single-channel :class:`UvMap`
    read from an 8-bit PNG (values scaled by 255 back to codes).  Unknown
    codes are reported with a warning and ignored.
    """
    if isinstance(labels, UvMap):
        if labels.channels != 1:
            raise DimensionError(f"label map must have 1 channel, got {labels.channels}")
        codes = np.rint(labels.values[:, :, 0] * 255.0).astype(np.int64)
    else:
        codes = np.asarray(labels).astype(np.int64)
        if codes.ndim == 3 and codes.shape[2] == 1:
            codes = codes[:, :, 0]
    unknown = sorted(set(np.unique(codes).tolist()) - {0, *FACE_CODES})
    if unknown:
        warnings.warn(f"ignoring unknown label codes {unknown}", stacklevel=2)
    face = FaceMask(np.isin(codes, FACE_CODES))
    eyes = dilate(FaceMask(np.isin(codes, EYE_CODES)))
    lips = FaceMask(np.isin(codes, LIP_CODES))
    return RegionSet(face=face, eyes=eyes, lips=lips)


def evaluate(result: UvMap, reference: UvMap, regions: RegionSet | FaceMask) -> list[dict]:
    """The metric protocol as a list of ``{metric, region, value}`` records.

    With a bare :class:`FaceMask`, only the face-region metrics are produced.
    Eye and lip regions are intersected with the face before use.
    """
    face = regions if isinstance(regions, FaceMask) else regions.face
    records = [
        {"metric": "rmse", "region": "face", "value": rmse(result, reference, face)},
        {"metric": "ssim", "region": "face", "value": ssim(result, reference, face)},
    ]
    if isinstance(regions, RegionSet):
        for name, region in (("eyes", regions.eyes), ("lips", regions.lips)):
            region = region & face
            if region.count:
                records.append({"metric": "hm", "region": name, "value": hm_distance(result, reference, region)})
    return records


def records_to_json(records: list[dict]) -> str:
    return json.dumps(records, indent=2)
