"""UV texture containers, PNG interchange and the compositing formulas.

Textures are stored as ``(height, width, channels)`` float arrays with
nominal range [0, 1].  A makeup layer is a 3-channel bases texture plus a
1-channel alpha matte.  The vector form of a layer used by the prior is
row-major over pixels with ``(r, g, b, a)`` interleaved per pixel.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np
import png

from makeupprior.errors import (
    ChannelMismatchError,
    DimensionError,
    TextureDecodeError,
    TextureFileError,
    TextureNotFoundError,
)

_VALID_CHANNELS = (1, 3, 4)


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr = np.array(arr, dtype=np.float64, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class UvMap:
    """An immutable ``(height, width, channels)`` texture."""

    values: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.values, dtype=np.float64)
        if arr.ndim == 2:
            arr = arr[:, :, None]
        if arr.ndim != 3 or arr.shape[2] not in _VALID_CHANNELS:
            raise DimensionError(f"expected (H, W, C) with C in {_VALID_CHANNELS}, got shape {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise ValueError("texture contains non-finite values")
        object.__setattr__(self, "values", _frozen(arr))

    @property
    def height(self) -> int:
        return self.values.shape[0]

    @property
    def width(self) -> int:
        return self.values.shape[1]

    @property
    def channels(self) -> int:
        return self.values.shape[2]

    @property
    def shape(self) -> tuple[int, int, int]:
        return self.values.shape

    def __eq__(self, other):
        if not isinstance(other, UvMap):
            return NotImplemented
        return self.shape == other.shape and bool(np.array_equal(self.values, other.values))

    def __repr__(self):
        return f"UvMap({self.width}x{self.height}x{self.channels})"


@dataclass(frozen=True, eq=False)
class MakeupLayer:
    """Makeup bases (3 channels) and alpha matte (1 channel) on one UV grid."""

    bases: UvMap
    alpha: UvMap

    def __post_init__(self):
        bases = self.bases if isinstance(self.bases, UvMap) else UvMap(self.bases)
        alpha = self.alpha if isinstance(self.alpha, UvMap) else UvMap(self.alpha)
        if bases.channels != 3:
            raise DimensionError(f"bases must have 3 channels, got {bases.channels}")
        if alpha.channels != 1:
            raise DimensionError(f"alpha must have 1 channel, got {alpha.channels}")
        if bases.shape[:2] != alpha.shape[:2]:
            raise DimensionError(f"bases {bases.shape[:2]} and alpha {alpha.shape[:2]} differ in size")
        if alpha.values.min() < 0.0 or alpha.values.max() > 1.0:
            raise ValueError("alpha values must lie in [0, 1]")
        object.__setattr__(self, "bases", bases)
        object.__setattr__(self, "alpha", alpha)

    @property
    def width(self) -> int:
        return self.bases.width

    @property
    def height(self) -> int:
        return self.bases.height

    def rgba(self) -> np.ndarray:
        """The layer as one ``(H, W, 4)`` array."""
        return np.concatenate([self.bases.values, self.alpha.values], axis=2)

    def __eq__(self, other):
        if not isinstance(other, MakeupLayer):
            return NotImplemented
        return self.bases == other.bases and self.alpha == other.alpha


@dataclass(frozen=True, eq=False)
class FaceMask:
    """Binary per-pixel membership on a UV or image grid."""

    bits: np.ndarray

    def __post_init__(self):
        bits = np.asarray(self.bits)
        if bits.ndim == 3 and bits.shape[2] == 1:
            bits = bits[:, :, 0]
        if bits.ndim != 2:
            raise DimensionError(f"mask must be 2-D, got shape {bits.shape}")
        bits = np.array(bits != 0, dtype=bool)
        bits.setflags(write=False)
        object.__setattr__(self, "bits", bits)

    @classmethod
    def full(cls, height: int, width: int) -> FaceMask:
        return cls(np.ones((height, width), dtype=bool))

    @property
    def height(self) -> int:
        return self.bits.shape[0]

    @property
    def width(self) -> int:
        return self.bits.shape[1]

    @property
    def count(self) -> int:
        return int(self.bits.sum())

    def __and__(self, other: FaceMask) -> FaceMask:
        _check_same_size(self.bits, other.bits)
        return FaceMask(self.bits & other.bits)

    def __or__(self, other: FaceMask) -> FaceMask:
        _check_same_size(self.bits, other.bits)
        return FaceMask(self.bits | other.bits)

    def __eq__(self, other):
        if not isinstance(other, FaceMask):
            return NotImplemented
        return self.bits.shape == other.bits.shape and bool(np.array_equal(self.bits, other.bits))


def _check_same_size(a: np.ndarray, b: np.ndarray):
    if a.shape[:2] != b.shape[:2]:
        raise DimensionError(f"size mismatch: {a.shape[:2]} vs {b.shape[:2]}")


# --------------------------------------------------------------------------
# PNG I/O
# --------------------------------------------------------------------------

def _read_png(path) -> tuple[np.ndarray, int]:
    path = os.fspath(path)
    if not os.path.isfile(path):
        raise TextureNotFoundError(f"no such file: {path}")
    try:
        width, height, rows, info = png.Reader(filename=path).asDirect()
        data = np.vstack([np.asarray(row) for row in rows])
    except (png.Error, ValueError, EOFError) as exc:
        raise TextureDecodeError(f"cannot decode PNG {path}: {exc}") from exc
    bitdepth = info["bitdepth"]
    if bitdepth not in (8, 16):
        raise TextureDecodeError(f"{path}: unsupported bit depth {bitdepth}")
    planes = info["planes"]
    return data.reshape(height, width, planes), bitdepth


def load_texture(path, expected_channels: int | None = None) -> UvMap:
    """Read an 8- or 16-bit PNG into a :class:`UvMap` scaled to [0, 1]."""
    raw, bitdepth = _read_png(path)
    if raw.shape[2] not in _VALID_CHANNELS:
        raise ChannelMismatchError(f"{os.fspath(path)}: {raw.shape[2]} channels is not a texture layout")
    if expected_channels is not None and raw.shape[2] != expected_channels:
        raise ChannelMismatchError(
            f"{os.fspath(path)}: expected {expected_channels} channels, found {raw.shape[2]}"
        )
    return UvMap(raw.astype(np.float64) / float(2**bitdepth - 1))


def save_texture(texture: UvMap, path, bitdepth: int = 8) -> None:
    """Write ``texture`` as PNG, clamping to [0, 1] and rounding to ``bitdepth``."""
    if bitdepth not in (8, 16):
        raise ValueError(f"bitdepth must be 8 or 16, got {bitdepth}")
    scale = 2**bitdepth - 1
    q = np.rint(np.clip(texture.values, 0.0, 1.0) * scale)
    q = q.astype(np.uint16 if bitdepth == 16 else np.uint8)
    writer = png.Writer(
        width=texture.width,
        height=texture.height,
        greyscale=texture.channels == 1,
        alpha=texture.channels == 4,
        bitdepth=bitdepth,
        compression=9,
    )
    try:
        with open(os.fspath(path), "wb") as fh:
            writer.write(fh, q.reshape(texture.height, texture.width * texture.channels))
    except OSError as exc:
        raise TextureFileError(f"cannot write {os.fspath(path)}: {exc}") from exc


def load_layer(bases_path, alpha_path) -> MakeupLayer:
    return MakeupLayer(load_texture(bases_path, 3), load_texture(alpha_path, 1))


def save_layer(layer: MakeupLayer, bases_path, alpha_path, bitdepth: int = 16) -> None:
    save_texture(layer.bases, bases_path, bitdepth)
    save_texture(layer.alpha, alpha_path, bitdepth)


def load_mask(path) -> FaceMask:
    """Read a mask PNG; any nonzero sample marks the pixel as inside."""
    raw, _ = _read_png(path)
    return FaceMask(np.any(raw != 0, axis=2))


def save_mask(mask: FaceMask, path) -> None:
    save_texture(UvMap(mask.bits.astype(np.float64)), path, bitdepth=8)


# --------------------------------------------------------------------------
# Compositing
# --------------------------------------------------------------------------

def blend_arrays(bases: np.ndarray, alpha: np.ndarray, bare: np.ndarray) -> np.ndarray:
    """Unclamped alpha blend on raw arrays; ``alpha`` is ``(H, W, 1)``."""
    return bases * alpha + (1.0 - alpha) * bare


def compose_alpha_blend(layer: MakeupLayer, bare: UvMap) -> UvMap:
    """Makeup-applied albedo ``M_b * M_a + (1 - M_a) * A_b``, clamped to [0, 1]."""
    if bare.channels != 3:
        raise DimensionError(f"bare albedo must have 3 channels, got {bare.channels}")
    _check_same_size(layer.bases.values, bare.values)
    out = blend_arrays(layer.bases.values, layer.alpha.values, bare.values)
    return UvMap(np.clip(out, 0.0, 1.0))


def compose_visual(layer: MakeupLayer) -> UvMap:
    """Display form of a layer: bases premultiplied by alpha."""
    return UvMap(layer.bases.values * layer.alpha.values)


def compose_residual(bare: UvMap, residual: UvMap) -> UvMap:
    """Additive residual makeup over bare skin, clamped to [0, 1].

    This is the residual baseline used for comparisons; it has no alpha and
    therefore carries the source skin along when transferred.
    """
    if bare.channels != 3 or residual.channels != 3:
        raise DimensionError("bare and residual must both have 3 channels")
    _check_same_size(bare.values, residual.values)
    return UvMap(np.clip(bare.values + residual.values, 0.0, 1.0))


def mirror_horizontal(texture: UvMap) -> UvMap:
    """Swap column ``x`` with column ``width - 1 - x``."""
    return UvMap(texture.values[:, ::-1, :])


def mirror_indices(height: int, width: int) -> np.ndarray:
    """Flat pixel index of each pixel's horizontal mirror partner."""
    idx = np.arange(height * width).reshape(height, width)
    return idx[:, ::-1].ravel()


def flatten(layer: MakeupLayer) -> np.ndarray:
    """Vectorize a layer as row-major pixels of ``(r, g, b, a)``."""
    return layer.rgba().reshape(-1)


def unflatten(vector: np.ndarray, width: int, height: int) -> MakeupLayer:
    vector = np.asarray(vector, dtype=np.float64)
    expected = width * height * 4
    if vector.ndim != 1 or vector.size != expected:
        raise DimensionError(f"vector length {vector.size} does not match {width}x{height}x4 = {expected}")
    rgba = vector.reshape(height, width, 4)
    return MakeupLayer(UvMap(rgba[:, :, :3]), UvMap(rgba[:, :, 3:]))
