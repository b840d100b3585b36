"""Regularized linear models for multiclass and multilabel problems.

The package bundles sparse linear prediction, a family of convex losses
with certified Lipschitz constants, two strongly convex regularizers,
a certified SGD trainer, Rademacher complexity estimators, a sparse text
data format, learning-curve experiment drivers, and randomized property
check suites.
"""

from .core import (
    LabeledExample,
    SparseVector,
    frobenius_norm,
    inf_norm_diff,
    l2p_norm,
    predict,
    sparse_from_dense,
)
from .dataio import (
    Dataset,
    ParseError,
    normalize_rows,
    parse_sparse_text,
    split,
    subsample,
    synth_gen,
    write_sparse_text,
)
from .experiments import (
    CurvePoint,
    CurveSpec,
    default_samplesize_grid,
    emit_csv,
    run_gap_curve,
    run_passes_curve,
    run_samplesize_curve,
)
from .losses import (
    BaseLoss,
    HINGE,
    LOGISTIC,
    LossSpec,
    mc_svm_subgrad,
    mc_svm_value,
    multinomial_logistic_subgrad,
    multinomial_logistic_value,
    ranking_subgrad,
    ranking_value,
    standard_loss_specs,
    subset_subgrad,
    subset_value,
    topk_svm_subgrad,
    topk_svm_value,
)
from .optimizer import (
    CertificateError,
    RunRecord,
    StepSchedule,
    TrainConfig,
    evaluate_mean_loss,
    evaluate_objective,
    sgd_step,
    train,
)
from .rademacher import (
    ExtendedSample,
    RademacherEstimate,
    SandwichReport,
    SandwichRow,
    estimate_complexity,
    identical_pair_sample,
    khintchine_floor,
    mean_abs_sign_sum,
    sandwich_check,
    sup_ball,
    write_report_csv,
)
from .regularizers import RegularizerSpec
from .checks import SUITE_NAMES, SuiteReport, central_difference, run_suite
from .seeding import derive_seed, generator

__version__ = "0.1.0"

__all__ = [
    "BaseLoss",
    "CertificateError",
    "CurvePoint",
    "CurveSpec",
    "Dataset",
    "ExtendedSample",
    "HINGE",
    "LOGISTIC",
    "LabeledExample",
    "LossSpec",
    "ParseError",
    "RademacherEstimate",
    "RegularizerSpec",
    "RunRecord",
    "SUITE_NAMES",
    "SandwichReport",
    "SandwichRow",
    "SparseVector",
    "StepSchedule",
    "SuiteReport",
    "TrainConfig",
    "central_difference",
    "default_samplesize_grid",
    "derive_seed",
    "emit_csv",
    "estimate_complexity",
    "evaluate_mean_loss",
    "evaluate_objective",
    "frobenius_norm",
    "generator",
    "identical_pair_sample",
    "inf_norm_diff",
    "khintchine_floor",
    "l2p_norm",
    "mc_svm_subgrad",
    "mc_svm_value",
    "mean_abs_sign_sum",
    "multinomial_logistic_subgrad",
    "multinomial_logistic_value",
    "normalize_rows",
    "parse_sparse_text",
    "predict",
    "ranking_subgrad",
    "ranking_value",
    "run_gap_curve",
    "run_passes_curve",
    "run_samplesize_curve",
    "run_suite",
    "sandwich_check",
    "sgd_step",
    "sparse_from_dense",
    "split",
    "standard_loss_specs",
    "subsample",
    "subset_subgrad",
    "subset_value",
    "sup_ball",
    "synth_gen",
    "topk_svm_subgrad",
    "topk_svm_value",
    "train",
    "write_report_csv",
    "write_sparse_text",
]
