"""Parametric synthetic makeup corpus.

Each style is bilaterally symmetric: a pair of Gaussian-falloff eyeshadow
blobs mirrored about the vertical centre line, a lip ellipse on the centre
line and optional blush discs.  Alpha is exactly zero outside those regions
and plateaus inside them (opaque cores with a narrow ramp whose width is
``edge_softness``).  Bases outside the alpha support are set to the palette
mean of the nearest zone, which keeps corpus variation that no composite can
reveal small.  Bare-skin albedos are smooth tinted fields.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from makeupprior.uvtex import FaceMask, MakeupLayer, UvMap, compose_alpha_blend, save_layer, save_mask, save_texture

# Makeup colours sit far from every skin tone in at least one channel (max
# channel gap >= 0.5), so an opaque makeup pixel is unambiguous in a composite.
EYESHADOW_PALETTE = (
    (0.10, 0.05, 0.30),
    (0.05, 0.15, 0.40),
    (0.12, 0.30, 0.15),
    (0.08, 0.06, 0.08),
    (0.15, 0.05, 0.20),
)
LIP_PALETTE = (
    (0.80, 0.05, 0.15),
    (0.60, 0.05, 0.25),
    (0.90, 0.10, 0.30),
    (0.45, 0.02, 0.08),
)
BLUSH_PALETTE = (
    (0.96, 0.44, 0.50),
    (0.90, 0.36, 0.30),
)
SKIN_PALETTE = (
    (0.92, 0.76, 0.66),
    (0.88, 0.70, 0.60),
    (0.95, 0.82, 0.74),
)
LABEL_SKIN = 1
LABEL_LEFT_EYE = 4
LABEL_RIGHT_EYE = 5
LABEL_UPPER_LIP = 7


@dataclass
class SyntheticSpec:
    seed: int = 0
    count: int = 10
    size: int = 64
    eyeshadow_blobs: tuple[int, int] = (1, 2)
    eyeshadow_spread: tuple[float, float] = (0.04, 0.07)
    eyeshadow_alpha: tuple[float, float] = (1.0, 1.0)
    lip_radius_x: tuple[float, float] = (0.09, 0.14)
    lip_radius_y: tuple[float, float] = (0.04, 0.06)
    lip_alpha: tuple[float, float] = (1.0, 1.0)
    # translucent blush breaks the opaque-core assumption; off unless asked for
    blush_probability: float = 0.0
    blush_alpha: tuple[float, float] = (0.25, 0.45)
    color_jitter: float = 0.03
    edge_softness: float = 0.02
    eyeshadow_palette: tuple = field(default=EYESHADOW_PALETTE)
    lip_palette: tuple = field(default=LIP_PALETTE)
    blush_palette: tuple = field(default=BLUSH_PALETTE)
    skin_palette: tuple = field(default=SKIN_PALETTE)

    def __post_init__(self):
        if self.count < 1:
            raise ValueError("count must be >= 1")
        if self.size < 32:
            raise ValueError("size must be >= 32")


@dataclass
class SyntheticCorpus:
    layers: list[MakeupLayer]
    bares: list[UvMap]
    face: FaceMask
    labels: np.ndarray


def _grid(size: int):
    # pixel-centre coordinates in [0, 1]; x and size-1-x are mirror images
    c = np.arange(size) / (size - 1)
    return np.meshgrid(c, c)


def face_mask(size: int) -> FaceMask:
    x, y = _grid(size)
    return FaceMask(((x - 0.5) / 0.44) ** 2 + ((y - 0.52) / 0.47) ** 2 <= 1.0)


def _plateau(strength: np.ndarray, low: float = 0.15, width: float = 0.45) -> np.ndarray:
    # 0 below `low`, ramps to 1 over `width`
    return np.clip((strength - low) / width, 0.0, 1.0)


def _jitter(rng, color, amount):
    return np.clip(np.asarray(color) + rng.uniform(-amount, amount, 3), 0.0, 1.0)


def _style(rng, spec: SyntheticSpec, x, y, face):
    size = x.shape[0]
    regions = []

    eye_color = _jitter(rng, spec.eyeshadow_palette[rng.integers(len(spec.eyeshadow_palette))], spec.color_jitter)
    eye_peak = rng.uniform(*spec.eyeshadow_alpha)
    eye_strength = np.zeros_like(x)
    for _ in range(rng.integers(spec.eyeshadow_blobs[0], spec.eyeshadow_blobs[1] + 1)):
        cx = rng.uniform(0.24, 0.34)
        cy = rng.uniform(0.30, 0.40)
        sx = rng.uniform(*spec.eyeshadow_spread) * 1.4
        sy = rng.uniform(*spec.eyeshadow_spread)
        for bx in (cx, 1.0 - cx):
            eye_strength = np.maximum(eye_strength, np.exp(-0.5 * (((x - bx) / sx) ** 2 + ((y - cy) / sy) ** 2)))
    regions.append((eye_peak * _plateau(eye_strength, width=spec.edge_softness), eye_color))

    lip_color = _jitter(rng, spec.lip_palette[rng.integers(len(spec.lip_palette))], spec.color_jitter)
    rx = rng.uniform(*spec.lip_radius_x)
    ry = rng.uniform(*spec.lip_radius_y)
    cy = rng.uniform(0.74, 0.78)
    rho = np.sqrt(((x - 0.5) / rx) ** 2 + ((y - cy) / ry) ** 2)
    regions.append((rng.uniform(*spec.lip_alpha) * np.clip((1.0 - rho) / spec.edge_softness, 0.0, 1.0), lip_color))

    if rng.uniform() < spec.blush_probability:
        blush_color = _jitter(rng, spec.blush_palette[rng.integers(len(spec.blush_palette))], spec.color_jitter)
        bx = rng.uniform(0.22, 0.28)
        by = rng.uniform(0.56, 0.62)
        r = rng.uniform(0.07, 0.10)
        strength = np.zeros_like(x)
        for cx in (bx, 1.0 - bx):
            strength = np.maximum(strength, np.exp(-0.5 * (((x - cx) ** 2 + (y - by) ** 2) / r**2)))
        regions.append((rng.uniform(*spec.blush_alpha) * _plateau(strength, width=spec.edge_softness), blush_color))

    alpha = np.zeros((size, size))
    # invisible bases default to the palette mean of the nearest makeup zone
    upper = (y < 0.5)[:, :, None]
    bases = np.where(
        upper,
        np.mean(spec.eyeshadow_palette, axis=0),
        np.where((y < 0.68)[:, :, None], np.mean(spec.blush_palette, axis=0), np.mean(spec.lip_palette, axis=0)),
    )
    for region_alpha, color in regions:
        take = region_alpha > alpha
        alpha = np.where(take, region_alpha, alpha)
        bases[take] = color
    alpha = np.where(face.bits, alpha, 0.0)
    return MakeupLayer(UvMap(bases), UvMap(alpha[:, :, None]))


def _bare(rng, spec: SyntheticSpec, x, y):
    tone = _jitter(rng, spec.skin_palette[rng.integers(len(spec.skin_palette))], 0.03)
    field_ = np.zeros_like(x)
    for _ in range(3):
        fx, fy = rng.uniform(1.0, 3.0, 2)
        phase = rng.uniform(0, 2 * np.pi, 2)
        field_ += np.sin(2 * np.pi * fx * x + phase[0]) * np.cos(2 * np.pi * fy * y + phase[1])
    shade = 0.02 * field_ / 3.0
    return UvMap(np.clip(tone[None, None, :] + shade[:, :, None], 0.0, 1.0))


def _labels(size: int, face: FaceMask, x, y) -> np.ndarray:
    labels = np.where(face.bits, LABEL_SKIN, 0).astype(np.uint8)
    for cx, code in ((0.29, LABEL_LEFT_EYE), (0.71, LABEL_RIGHT_EYE)):
        labels[((x - cx) / 0.07) ** 2 + ((y - 0.38) / 0.03) ** 2 <= 1.0] = code
    labels[((x - 0.5) / 0.12) ** 2 + ((y - 0.76) / 0.05) ** 2 <= 1.0] = LABEL_UPPER_LIP
    return labels


def generate(spec: SyntheticSpec) -> SyntheticCorpus:
    """Build ``spec.count`` makeup layers and bare albedos in memory."""
    rng = np.random.default_rng(spec.seed)
    x, y = _grid(spec.size)
    face = face_mask(spec.size)
    layers, bares = [], []
    for _ in range(spec.count):
        layers.append(_style(rng, spec, x, y, face))
        bares.append(_bare(rng, spec, x, y))
    return SyntheticCorpus(layers, bares, face, _labels(spec.size, face, x, y))


def gen_synthetic(spec: SyntheticSpec, out_dir) -> list[dict]:
    """Write a synthetic corpus to ``out_dir`` and return its file manifest.

    Per sample ``i``: ``makeup_iii_bases.png``, ``makeup_iii_alpha.png``,
    ``bare_iii.png`` and the self-composited ``target_iii.png`` (16-bit).
    Shared: ``face_mask.png``, ``labels.png`` and ``corpus.json``.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    corpus = generate(spec)
    save_mask(corpus.face, out / "face_mask.png")
    save_texture(UvMap(corpus.labels.astype(np.float64) / 255.0), out / "labels.png", bitdepth=8)
    entries = []
    for i, (layer, bare) in enumerate(zip(corpus.layers, corpus.bares)):
        entry = {
            "bases": f"makeup_{i:03d}_bases.png",
            "alpha": f"makeup_{i:03d}_alpha.png",
            "bare": f"bare_{i:03d}.png",
            "target": f"target_{i:03d}.png",
        }
        save_layer(layer, out / entry["bases"], out / entry["alpha"], bitdepth=16)
        save_texture(bare, out / entry["bare"], bitdepth=16)
        save_texture(compose_alpha_blend(layer, bare), out / entry["target"], bitdepth=16)
        entries.append(entry)
    doc = {
        "spec": {k: v for k, v in asdict(spec).items() if not k.endswith("palette")},
        "face_mask": "face_mask.png",
        "labels": "labels.png",
        "samples": entries,
    }
    (out / "corpus.json").write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")
    return entries
