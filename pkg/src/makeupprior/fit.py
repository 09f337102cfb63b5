"""Coefficient estimation by loss minimisation in UV space.

The objective combines four weighted terms over the face mask:

* photometric L1 between the alpha-blended albedo and the target,
* L2 penalty on the coefficients,
* L1 soft symmetry between the decoded texture and its mirror,
* L1 penalty on the decoded alpha matte.

Pixel terms are averaged over masked pixels (and channels), so weights do
not depend on resolution.  Gradients are analytic; the decode clamp passes
no gradient for entries outside [0, 1].
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from makeupprior.errors import DimensionError, EmptyMaskError
from makeupprior.metrics import rmse
from makeupprior.prior import Coefficients, PcaPrior, decode, project
from makeupprior.uvtex import FaceMask, MakeupLayer, UvMap, compose_alpha_blend, mirror_indices


@dataclass
class FitConfig:
    """Loss weights and optimizer schedule; defaults are the reference weights and schedule."""

    w_pho: float = 100.0
    w_reg: float = 1e-4
    w_sym: float = 8.0
    w_alpha: float = 1.0
    step_size: float = 1e-2
    iterations: int = 40
    moment1: float = 0.9
    moment2: float = 0.999
    epsilon: float = 1e-8
    # flat pixel index of each pixel's symmetric partner; None = horizontal mirror
    mirror_map: list[int] | None = None

    def __post_init__(self):
        for name in ("w_pho", "w_reg", "w_sym", "w_alpha"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")
        if self.iterations < 0:
            raise ValueError("iterations must be >= 0")
        if self.step_size <= 0:
            raise ValueError("step_size must be > 0")

    def to_json(self) -> str:
        doc = asdict(self)
        if self.mirror_map is not None:
            doc["mirror_map"] = [int(i) for i in self.mirror_map]
        return json.dumps(doc, indent=2)

    @classmethod
    def from_json(cls, text: str) -> FitConfig:
        doc = json.loads(text)
        known = {f.name for f in fields(cls)}
        unknown = set(doc) - known
        if unknown:
            raise ValueError(f"unknown FitConfig fields: {sorted(unknown)}")
        return cls(**doc)

    @classmethod
    def load(cls, path) -> FitConfig:
        return cls.from_json(Path(path).read_text(encoding="utf-8"))

    def scaled(self, c: float) -> FitConfig:
        """Same config with all four loss weights multiplied by ``c``."""
        return FitConfig(
            **{
                **asdict(self),
                "w_pho": self.w_pho * c,
                "w_reg": self.w_reg * c,
                "w_sym": self.w_sym * c,
                "w_alpha": self.w_alpha * c,
            }
        )


@dataclass(frozen=True)
class LossBreakdown:
    pho: float
    reg: float
    sym: float
    alpha: float

    @property
    def total(self) -> float:
        return self.pho + self.reg + self.sym + self.alpha

    def as_row(self) -> tuple[float, float, float, float, float]:
        return (self.pho, self.reg, self.sym, self.alpha, self.total)


@dataclass
class FitResult:
    coefficients: Coefficients
    history: list[LossBreakdown] = field(default_factory=list)
    converged: bool = False
    best_iteration: int = 0

    def best_so_far(self) -> np.ndarray:
        return np.minimum.accumulate([h.total for h in self.history])


@dataclass
class CycleReport:
    original: Coefficients
    refit: Coefficients
    coeff_distance: float
    composite_rmse: float


class _Problem:
    """Inputs of one fit, validated and flattened once."""

    def __init__(self, prior: PcaPrior, bare: UvMap, target: UvMap, face: FaceMask, cfg: FitConfig):
        shape = (prior.height, prior.width)
        for name, tex in (("bare", bare), ("target", target)):
            if tex.channels != 3:
                raise DimensionError(f"{name} must have 3 channels, got {tex.channels}")
            if tex.shape[:2] != shape:
                raise DimensionError(f"{name} is {tex.shape[:2]}, prior grid is {shape}")
        if (face.height, face.width) != shape:
            raise DimensionError(f"mask is {(face.height, face.width)}, prior grid is {shape}")
        n = face.count
        if n == 0:
            raise EmptyMaskError("face mask selects no pixels")
        npix = shape[0] * shape[1]
        if cfg.mirror_map is None:
            mirror = mirror_indices(*shape)
        else:
            mirror = np.asarray(cfg.mirror_map, dtype=np.intp)
            if mirror.shape != (npix,) or mirror.min() < 0 or mirror.max() >= npix:
                raise DimensionError(f"mirror_map must hold {npix} pixel indices in range")
        self.prior = prior
        self.cfg = cfg
        self.shape = shape
        self.bare = bare.values.reshape(npix, 3)
        self.target = target.values.reshape(npix, 3)
        self.mask = face.bits.reshape(npix, 1).astype(np.float64)
        self.n = float(n)
        self.mirror = mirror
        self.mirror_is_perm = bool(np.array_equal(np.sort(mirror), np.arange(npix)))

    def evaluate(self, coeffs: np.ndarray, want_grad: bool = True):
        cfg, prior = self.cfg, self.prior
        if coeffs.shape != (prior.k,):
            raise DimensionError(f"got {coeffs.size} coefficients for a prior with k={prior.k}")
        raw = prior.mean64 + prior.basis64 @ coeffs
        texture = np.clip(raw, 0.0, 1.0).reshape(-1, 4)
        bases, alpha = texture[:, :3], texture[:, 3:]

        blended = bases * alpha + (1.0 - alpha) * self.bare
        albedo = np.clip(blended, 0.0, 1.0)
        resid = albedo - self.target
        pho = cfg.w_pho * float(np.sum(np.abs(resid) * self.mask)) / (3.0 * self.n)

        diff = texture - texture[self.mirror]
        sym = cfg.w_sym * float(np.sum(np.abs(diff) * self.mask)) / (4.0 * self.n)

        alpha_term = cfg.w_alpha * float(np.sum(np.abs(alpha) * self.mask)) / self.n
        reg = cfg.w_reg * float(coeffs @ coeffs)
        loss = LossBreakdown(pho=pho, reg=reg, sym=sym, alpha=alpha_term)
        if not want_grad:
            return loss, None

        g_albedo = (cfg.w_pho / (3.0 * self.n)) * np.sign(resid) * self.mask
        g_albedo *= (blended >= 0.0) & (blended <= 1.0)
        g_tex = np.empty_like(texture)
        g_tex[:, :3] = g_albedo * alpha
        g_tex[:, 3] = np.sum(g_albedo * (bases - self.bare), axis=1)

        g_sym = (cfg.w_sym / (4.0 * self.n)) * np.sign(diff) * self.mask
        g_tex += g_sym
        if self.mirror_is_perm:
            g_tex[self.mirror] -= g_sym
        else:
            np.add.at(g_tex, self.mirror, -g_sym)

        g_tex[:, 3] += (cfg.w_alpha / self.n) * np.sign(alpha[:, 0]) * self.mask[:, 0]

        g_raw = g_tex.reshape(-1) * ((raw >= 0.0) & (raw <= 1.0))
        grad = prior.basis64.T @ g_raw + 2.0 * cfg.w_reg * coeffs
        return loss, grad


def _values(coeffs) -> np.ndarray:
    if isinstance(coeffs, Coefficients):
        return coeffs.values
    return np.asarray(coeffs, dtype=np.float64)


def total_loss(
    prior: PcaPrior,
    coeffs: Coefficients,
    bare: UvMap,
    target: UvMap,
    face: FaceMask,
    cfg: FitConfig | None = None,
) -> LossBreakdown:
    """Weighted loss terms of ``coeffs`` against ``target`` over ``face``."""
    problem = _Problem(prior, bare, target, face, cfg or FitConfig())
    return problem.evaluate(_values(coeffs), want_grad=False)[0]


def loss_gradient(
    prior: PcaPrior,
    coeffs: Coefficients,
    bare: UvMap,
    target: UvMap,
    face: FaceMask,
    cfg: FitConfig | None = None,
) -> np.ndarray:
    """Analytic (sub)gradient of the total loss with respect to ``coeffs``."""
    problem = _Problem(prior, bare, target, face, cfg or FitConfig())
    return problem.evaluate(_values(coeffs))[1]


def _converged(history: list[LossBreakdown], window: int = 5, rtol: float = 1e-6) -> bool:
    if len(history) <= window:
        return False
    best = np.minimum.accumulate([h.total for h in history])
    before, after = best[-window - 1], best[-1]
    if before == 0.0:
        return True
    return (before - after) / abs(before) < rtol


def fit_coeffs(
    prior: PcaPrior,
    bare: UvMap,
    target: UvMap,
    face: FaceMask,
    cfg: FitConfig | None = None,
    init: Coefficients | None = None,
) -> FitResult:
    """Minimise the total loss with bias-corrected Adam, starting from ``init``.

    Returns the iterate with the lowest total loss seen; ``history`` holds
    the loss of every iterate, including the starting point.
    """
    cfg = cfg or FitConfig()
    problem = _Problem(prior, bare, target, face, cfg)
    x = np.zeros(prior.k) if init is None else np.array(_values(init), dtype=np.float64)
    if x.shape != (prior.k,):
        raise DimensionError(f"init has {x.size} coefficients, prior has k={prior.k}")

    loss, grad = problem.evaluate(x)
    history = [loss]
    best_x, best_total, best_it = x.copy(), loss.total, 0
    m = np.zeros_like(x)
    v = np.zeros_like(x)
    b1, b2 = cfg.moment1, cfg.moment2
    for t in range(1, cfg.iterations + 1):
        m = b1 * m + (1.0 - b1) * grad
        v = b2 * v + (1.0 - b2) * grad * grad
        m_hat = m / (1.0 - b1**t)
        v_hat = v / (1.0 - b2**t)
        x = x - cfg.step_size * m_hat / (np.sqrt(v_hat) + cfg.epsilon)
        loss, grad = problem.evaluate(x)
        history.append(loss)
        if loss.total < best_total:
            best_x, best_total, best_it = x.copy(), loss.total, t

    return FitResult(
        coefficients=Coefficients(best_x),
        history=history,
        converged=_converged(history),
        best_iteration=best_it,
    )


def warm_start(
    prior: PcaPrior,
    bare: UvMap,
    target: UvMap,
    gain: float = 2.0,
    threshold: float = 0.05,
) -> Coefficients:
    """Heuristic initial coefficients from the target/bare difference.

    A pseudo alpha is taken from the largest per-channel change, amplified
    by ``gain``; where it exceeds ``threshold`` the target colour stands in
    for the bases, elsewhere the prior's mean bases.  The pseudo layer is
    then projected onto the prior.
    """
    if bare.shape != target.shape or bare.channels != 3:
        raise DimensionError(f"bare {bare.shape} and target {target.shape} must be matching 3-channel maps")
    if bare.shape[:2] != (prior.height, prior.width):
        raise DimensionError(f"textures are {bare.shape[:2]}, prior grid is {(prior.height, prior.width)}")
    change = np.max(np.abs(target.values - bare.values), axis=2, keepdims=True)
    alpha = np.clip(change * gain, 0.0, 1.0)
    mean_bases = np.clip(prior.mean64.reshape(prior.height, prior.width, 4)[:, :, :3], 0.0, 1.0)
    bases = np.where(alpha > threshold, target.values, mean_bases)
    return project(prior, MakeupLayer(UvMap(bases), UvMap(alpha)))


def cycle_check(
    prior: PcaPrior,
    coeffs: Coefficients,
    bare_other: UvMap,
    face: FaceMask,
    cfg: FitConfig | None = None,
    init: Coefficients | None = None,
) -> CycleReport:
    """Transfer ``coeffs`` onto another bare face, refit, and compare.

    ``coeff_distance`` is the mean squared difference between the original
    and refit coefficients; ``composite_rmse`` compares the refit composite
    with the transferred image over ``face``.
    """
    cfg = cfg or FitConfig()
    transferred = compose_alpha_blend(decode(prior, coeffs), bare_other)
    if init is None:
        init = warm_start(prior, bare_other, transferred)
    result = fit_coeffs(prior, bare_other, transferred, face, cfg, init)
    refit = result.coefficients
    recomposed = compose_alpha_blend(decode(prior, refit), bare_other)
    return CycleReport(
        original=coeffs,
        refit=refit,
        coeff_distance=float(np.mean((refit.values - coeffs.values) ** 2)),
        composite_rmse=rmse(recomposed, transferred, face),
    )


def write_history_csv(history: list[LossBreakdown], path) -> None:
    lines = ["iteration,pho,reg,sym,alpha,total"]
    for i, h in enumerate(history):
        lines.append(",".join([str(i)] + [repr(float(x)) for x in h.as_row()]))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
