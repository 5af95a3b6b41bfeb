"""Focal-loss confidence calibration toolkit.

Training with the focal loss distorts predicted probabilities away from
the true class posterior in a precisely characterized way.  This package
implements the closed-form recovery transform that undoes the distortion,
the confidence thresholds separating guaranteed over- and under-estimation,
the pointwise risk minimizer with two independent solvers, calibration
metrics (ECE, classwise ECE, NLL, KL divergence, error rate), temperature
scaling and label smoothing, a fully deterministic synthetic experiment,
and a verification suite that checks every claim numerically.
"""

from .calibrate import (
    Objective,
    TemperatureFit,
    apply_psi_dataset,
    apply_temperature,
    fit_temperature,
    scale_dataset,
    smooth_labels,
    softmax,
)
from .core import (
    CLAMP_EPS,
    SIMPLEX_TOL,
    LossKind,
    LossSpec,
    as_simplex,
    confidence_weight,
    cross_entropy,
    focal_loss,
    is_uniform_on_support,
    one_hot,
    recover_binary,
    recover_posterior,
    recover_posterior_rows,
    recovery_score,
)
from .errors import (
    CalibrationError,
    ConvergenceError,
    DegenerateError,
    DimensionError,
    DivergenceError,
    DomainError,
    EmptyDataError,
    InconsistentKError,
    InvalidSimplexError,
    ParseError,
    SingularityError,
)
from .io import FileFormat, load_predictions, save_predictions
from .metrics import (
    BinningReport,
    PredictionSet,
    ScoreKind,
    bin_reliability,
    cw_ece,
    ece,
    error_rate,
    kld,
    kld_rows,
    nll,
)
from .minimizer import (
    RiskMinimizerResult,
    confidence_curve,
    minimize_risk_inverse,
    minimize_risk_pg,
    pointwise_risk,
    project_to_simplex,
)
from .synth import (
    MlpModel,
    PanelReport,
    PosteriorOracle,
    SyntheticDistribution,
    TrainConfig,
    default_distribution,
    evaluate_panel,
    grad_check,
    train_mlp,
)
from .thresholds import (
    Direction,
    Region,
    ThresholdPair,
    confidence_direction,
    confidence_region,
    overconfidence_threshold,
    thresholds,
    underconfidence_threshold,
)
from .verify import VerifyCheck, VerifyReport, run_verify

__version__ = "0.1.0"

__all__ = [
    "BinningReport",
    "CLAMP_EPS",
    "CalibrationError",
    "ConvergenceError",
    "DegenerateError",
    "DimensionError",
    "Direction",
    "DivergenceError",
    "DomainError",
    "EmptyDataError",
    "FileFormat",
    "InconsistentKError",
    "InvalidSimplexError",
    "LossKind",
    "LossSpec",
    "MlpModel",
    "Objective",
    "PanelReport",
    "ParseError",
    "PosteriorOracle",
    "PredictionSet",
    "Region",
    "RiskMinimizerResult",
    "SIMPLEX_TOL",
    "ScoreKind",
    "SingularityError",
    "SyntheticDistribution",
    "TemperatureFit",
    "ThresholdPair",
    "TrainConfig",
    "VerifyCheck",
    "VerifyReport",
    "apply_psi_dataset",
    "apply_temperature",
    "as_simplex",
    "bin_reliability",
    "confidence_curve",
    "confidence_direction",
    "confidence_region",
    "confidence_weight",
    "cross_entropy",
    "cw_ece",
    "default_distribution",
    "ece",
    "error_rate",
    "evaluate_panel",
    "fit_temperature",
    "focal_loss",
    "grad_check",
    "is_uniform_on_support",
    "kld",
    "kld_rows",
    "load_predictions",
    "minimize_risk_inverse",
    "minimize_risk_pg",
    "nll",
    "one_hot",
    "overconfidence_threshold",
    "pointwise_risk",
    "project_to_simplex",
    "recover_binary",
    "recover_posterior",
    "recover_posterior_rows",
    "recovery_score",
    "run_verify",
    "save_predictions",
    "scale_dataset",
    "smooth_labels",
    "softmax",
    "thresholds",
    "train_mlp",
    "underconfidence_threshold",
]
