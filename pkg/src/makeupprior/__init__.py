"""PCA makeup prior over 4-channel UV textures.

Build a linear makeup model from a corpus of (bases, alpha) layers, fit
coefficients to makeup-applied albedos, and run transfer, interpolation and
region metrics on the results.
"""

from makeupprior.uvtex import (
    FaceMask,
    MakeupLayer,
    UvMap,
    compose_alpha_blend,
    compose_residual,
    compose_visual,
    flatten,
    load_layer,
    load_mask,
    load_texture,
    mirror_horizontal,
    save_layer,
    save_mask,
    save_texture,
    unflatten,
)
from makeupprior.prior import (
    Coefficients,
    PcaPrior,
    build_pca,
    decode,
    load_model,
    project,
    sample,
    save_model,
)
from makeupprior.fit import (
    CycleReport,
    FitConfig,
    FitResult,
    LossBreakdown,
    cycle_check,
    fit_coeffs,
    loss_gradient,
    total_loss,
    warm_start,
)
from makeupprior.apps import (
    bilerp_coeffs,
    fade_alpha,
    lerp_coeffs,
    lerp_layers,
    mix_coeffs,
    transfer,
)
from makeupprior.metrics import (
    RegionSet,
    dilate,
    evaluate,
    hm_distance,
    regions_from_labels,
    rmse,
    ssim,
)

__version__ = "0.1.0"
