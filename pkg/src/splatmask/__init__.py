"""splatmask: differentiable Gaussian-splat masks, signed-distance level
sets, dual-task consistency fitting, and segmentation metrics on plain
numpy grids."""

from .errors import (
    DegenerateScaleError,
    GenerationError,
    NonFiniteGradientError,
    PgmError,
    PgmMalformedHeaderError,
    PgmTruncatedError,
    PgmUnsupportedMagicError,
    ShapeMismatchError,
    SplatmaskError,
    UndefinedBoundaryError,
    UndefinedMetricError,
)
from .fit import FitOptions, FitResult, fit_dual_task, fit_splat, sharpen
from .grid import as_field, as_mask, pixel_centers, threshold
from .levelset import (
    boundary_pixels,
    brute_force_edt,
    lsf_to_soft_mask,
    sigmoid,
    signed_edt,
)
from .losses import (
    LossBreakdown,
    LossWeights,
    dice_loss,
    dtc_loss,
    dtc_schedule,
    focal_loss,
    l2_loss,
    total_loss,
)
from .metrics import (
    ConfusionCounts,
    EvalReport,
    FoldAssignment,
    average_precision,
    confusion,
    dice_score,
    evaluate_masks,
    evaluate_scores,
    jaccard,
    kfold_split,
    pixel_accuracy,
    pr_curve,
    roc_auc,
    sensitivity,
    specificity,
)
from .optim import AdamState, adam_step, gradient_check
from .pgm import read_lsf, read_mask, read_pgm, write_lsf, write_mask, write_pgm
from .splat import (
    EPS_SCALE,
    GaussianSplat,
    SplatGradient,
    build_covariance,
    render,
    render_backward,
    splat_from_mask_moments,
)
from .synth import (
    AugmentationConfig,
    ShapeSpec,
    augment,
    ellipse_with_area,
    generate,
    random_blob_spec,
    random_crescent_spec,
    random_ellipse_spec,
    rotate90,
    rotate_field_bilinear,
    test_time_average,
)

__version__ = "0.1.0"
