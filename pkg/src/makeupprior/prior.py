"""Linear PCA makeup prior: ``M = mean + basis @ coeffs``.

The basis is stored orthonormal, with the corpus standard deviation along
each direction kept separately, so projection is a transpose-multiply and
sampling variance is explicit.  Model arrays are held as float32 to match
the on-disk payload; arithmetic is carried out in float64.
"""

from __future__ import annotations

import hashlib
import json
import logging
import os
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import Sequence

import numpy as np

from makeupprior.errors import (
    ChecksumError,
    CorruptManifestError,
    DimensionError,
    PayloadSizeError,
)
from makeupprior.uvtex import MakeupLayer, flatten, unflatten

log = logging.getLogger(__name__)

FORMAT_VERSION = 1
MANIFEST_NAME = "manifest.json"
PAYLOAD_NAME = "payload.bin"
_F32 = np.dtype("<f4")


def _readonly(arr, dtype) -> np.ndarray:
    arr = np.array(arr, dtype=dtype, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class Coefficients:
    """One makeup style as a coefficient vector in raw basis units."""

    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=np.float64)
        if vals.ndim != 1:
            raise DimensionError(f"coefficients must be a vector, got shape {vals.shape}")
        if not np.all(np.isfinite(vals)):
            raise ValueError("coefficients must be finite")
        object.__setattr__(self, "values", _readonly(vals, np.float64))

    @classmethod
    def zeros(cls, k: int) -> Coefficients:
        return cls(np.zeros(k))

    @property
    def k(self) -> int:
        return self.values.size

    def __len__(self):
        return self.values.size

    def __eq__(self, other):
        if not isinstance(other, Coefficients):
            return NotImplemented
        return bool(np.array_equal(self.values, other.values))

    def to_json(self) -> str:
        return json.dumps({"k": self.k, "values": [float(v) for v in self.values]})

    @classmethod
    def from_json(cls, text: str) -> Coefficients:
        doc = json.loads(text)
        values = doc["values"]
        if int(doc["k"]) != len(values):
            raise DimensionError(f"coefficient file declares k={doc['k']} but lists {len(values)} values")
        return cls(np.array(values, dtype=np.float64))

    def save(self, path) -> None:
        Path(path).write_text(self.to_json() + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path) -> Coefficients:
        return cls.from_json(Path(path).read_text(encoding="utf-8"))


@dataclass(frozen=True, eq=False)
class PcaPrior:
    """Mean texture, orthonormal basis (D x K) and per-component stddevs."""

    width: int
    height: int
    mean: np.ndarray
    basis: np.ndarray
    stddevs: np.ndarray

    def __post_init__(self):
        d = self.width * self.height * 4
        mean = _readonly(self.mean, np.float32).reshape(-1)
        basis = _readonly(self.basis, np.float32)
        if basis.ndim == 1 and basis.size == 0:
            basis = _readonly(np.zeros((d, 0)), np.float32)
        stddevs = _readonly(self.stddevs, np.float32).reshape(-1)
        if mean.size != d:
            raise DimensionError(f"mean has length {mean.size}, expected {d}")
        if basis.shape != (d, stddevs.size):
            raise DimensionError(f"basis shape {basis.shape} inconsistent with D={d}, k={stddevs.size}")
        if np.any(stddevs < 0) or np.any(np.diff(stddevs) > 0):
            raise ValueError("stddevs must be nonnegative and non-increasing")
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "basis", basis)
        object.__setattr__(self, "stddevs", stddevs)

    @property
    def k(self) -> int:
        return self.stddevs.size

    @property
    def dim(self) -> int:
        return self.mean.size

    @cached_property
    def mean64(self) -> np.ndarray:
        return self.mean.astype(np.float64)

    @cached_property
    def basis64(self) -> np.ndarray:
        return self.basis.astype(np.float64)

    def mean_layer(self) -> MakeupLayer:
        return unflatten(np.clip(self.mean64, 0.0, 1.0), self.width, self.height)


def build_pca(corpus: Sequence[MakeupLayer], k: int = 100) -> PcaPrior:
    """Fit the prior to a corpus of makeup layers.

    The basis holds the top ``min(k, rank)`` right singular vectors of the
    centered ``N x D`` data matrix, each flipped so its largest-magnitude
    entry is positive.  When the corpus rank is below ``k`` the returned
    prior has fewer components.
    """
    if len(corpus) == 0:
        raise ValueError("corpus is empty")
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    width, height = corpus[0].width, corpus[0].height
    for i, layer in enumerate(corpus):
        if (layer.width, layer.height) != (width, height):
            raise DimensionError(
                f"corpus sample {i} is {layer.width}x{layer.height}, expected {width}x{height}"
            )

    data = np.stack([flatten(layer) for layer in corpus])
    n, d = data.shape
    mean = data.mean(axis=0)
    centered = data - mean
    _, sigma, vt = np.linalg.svd(centered, full_matrices=False)

    # rank cutoff measured against the data scale so zero-variance corpora give rank 0
    scale = max(sigma[0] if sigma.size else 0.0, np.linalg.norm(data) / np.sqrt(n))
    tol = max(n, d) * np.finfo(np.float64).eps * scale
    rank = int(np.sum(sigma > tol))
    keep = min(k, rank)
    if keep < k:
        log.info("corpus rank %d is below requested k=%d; keeping %d components", rank, k, keep)

    basis = vt[:keep].T.copy()
    if keep:
        pivot = np.argmax(np.abs(basis), axis=0)
        signs = np.sign(basis[pivot, np.arange(keep)])
        basis *= signs
    stddevs = sigma[:keep] / np.sqrt(n - 1) if n > 1 else np.zeros(keep)
    return PcaPrior(width, height, mean, basis.reshape(d, keep), stddevs)


def _check_coeffs(prior: PcaPrior, coeffs: Coefficients):
    if coeffs.k != prior.k:
        raise DimensionError(f"got {coeffs.k} coefficients for a prior with k={prior.k}")


def decode_vector(prior: PcaPrior, coeffs: Coefficients) -> np.ndarray:
    """``mean + basis @ coeffs`` with no clamping."""
    _check_coeffs(prior, coeffs)
    return prior.mean64 + prior.basis64 @ coeffs.values


def decode(prior: PcaPrior, coeffs: Coefficients) -> MakeupLayer:
    """Generate the makeup layer for ``coeffs``; all channels clamped to [0, 1]."""
    v = np.clip(decode_vector(prior, coeffs), 0.0, 1.0)
    return unflatten(v, prior.width, prior.height)


def project_vector(prior: PcaPrior, vector: np.ndarray) -> Coefficients:
    vector = np.asarray(vector, dtype=np.float64)
    if vector.shape != (prior.dim,):
        raise DimensionError(f"vector length {vector.size} does not match prior dimension {prior.dim}")
    return Coefficients(prior.basis64.T @ (vector - prior.mean64))


def project(prior: PcaPrior, layer: MakeupLayer) -> Coefficients:
    """Least-squares coefficients of ``layer`` in the prior subspace."""
    if (layer.width, layer.height) != (prior.width, prior.height):
        raise DimensionError(
            f"layer is {layer.width}x{layer.height}, prior is {prior.width}x{prior.height}"
        )
    return project_vector(prior, flatten(layer))


def sample(prior: PcaPrior, seed: int, scale: float = 1.0) -> Coefficients:
    """Draw ``coeffs[i] ~ N(0, (scale * stddevs[i])**2)`` from a seeded generator."""
    if scale < 0:
        raise ValueError(f"scale must be nonnegative, got {scale}")
    rng = np.random.default_rng(seed)
    return Coefficients(rng.standard_normal(prior.k) * (scale * prior.stddevs.astype(np.float64)))


# --------------------------------------------------------------------------
# persistence
# --------------------------------------------------------------------------

def _sections(width: int, height: int, k: int) -> dict[str, int]:
    d = width * height * 4
    return {"mean": d * 4, "basis": d * k * 4, "stddevs": k * 4}


def save_model(prior: PcaPrior, directory) -> None:
    """Write ``manifest.json`` and ``payload.bin`` into ``directory``."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    payload = b"".join(
        [
            prior.mean.astype(_F32).tobytes(),
            np.ascontiguousarray(prior.basis.T).astype(_F32).tobytes(),
            prior.stddevs.astype(_F32).tobytes(),
        ]
    )
    sections = _sections(prior.width, prior.height, prior.k)
    manifest = {
        "format_version": FORMAT_VERSION,
        "width": prior.width,
        "height": prior.height,
        "k": prior.k,
        "payload_bytes": {**sections, "total": len(payload)},
        "checksum": {"algorithm": "sha256", "value": hashlib.sha256(payload).hexdigest()},
    }
    (directory / PAYLOAD_NAME).write_bytes(payload)
    (directory / MANIFEST_NAME).write_text(json.dumps(manifest, indent=2) + "\n", encoding="utf-8")


def _read_manifest(path: Path) -> dict:
    try:
        manifest = json.loads(path.read_text(encoding="utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise CorruptManifestError(f"{path}: not valid UTF-8 JSON ({exc})") from exc
    if not isinstance(manifest, dict):
        raise CorruptManifestError(f"{path}: manifest must be a JSON object")
    try:
        version = int(manifest["format_version"])
        width, height, k = int(manifest["width"]), int(manifest["height"]), int(manifest["k"])
        total = int(manifest["payload_bytes"]["total"])
        checksum = str(manifest["checksum"]["value"])
    except (KeyError, TypeError, ValueError) as exc:
        raise CorruptManifestError(f"{path}: missing or malformed field {exc}") from exc
    if version != FORMAT_VERSION:
        raise CorruptManifestError(f"{path}: unsupported format_version {version}")
    if width < 1 or height < 1 or k < 0:
        raise CorruptManifestError(f"{path}: invalid dimensions width={width} height={height} k={k}")
    return {
        "width": width,
        "height": height,
        "k": k,
        "total": total,
        "declared": manifest["payload_bytes"],
        "checksum": checksum,
    }


def load_model(directory) -> PcaPrior:
    """Read a model directory written by :func:`save_model`."""
    directory = Path(directory)
    info = _read_manifest(directory / MANIFEST_NAME)
    payload = (directory / PAYLOAD_NAME).read_bytes()
    width, height, k = info["width"], info["height"], info["k"]
    sections = _sections(width, height, k)
    expected = sum(sections.values())
    if len(payload) != expected:
        d = width * height * 4
        implied = (len(payload) / 4 - d) / (d + 1)
        hint = f", payload sized for k={int(implied)}" if implied >= 0 and float(implied).is_integer() else ""
        raise PayloadSizeError(
            f"{directory / PAYLOAD_NAME}: {len(payload)} bytes but manifest k={k} "
            f"requires {expected}{hint}"
        )
    declared = info["declared"]
    for name, size in {**sections, "total": expected}.items():
        if name in declared and int(declared[name]) != size:
            raise CorruptManifestError(f"manifest payload_bytes.{name}={declared[name]}, expected {size}")
    if hashlib.sha256(payload).hexdigest() != info["checksum"]:
        raise ChecksumError(f"{directory / PAYLOAD_NAME}: sha256 does not match manifest")

    d = width * height * 4
    flat = np.frombuffer(payload, dtype=_F32)
    mean = flat[:d]
    basis = flat[d : d + d * k].reshape(k, d).T
    stddevs = flat[d + d * k :]
    return PcaPrior(width, height, mean, basis, stddevs)


def model_exists(directory) -> bool:
    return os.path.isfile(Path(directory) / MANIFEST_NAME)
