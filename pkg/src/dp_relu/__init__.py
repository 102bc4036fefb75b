"""Differentially private ReLU regression.

Trainers (one-pass and mini-batch GLMtron with adaptive clipping, plus a
DP-SGD baseline), exact noise calibration and zCDP accounting, synthetic
data generation under sub-Gaussian design assumptions, a tracing-attack
membership harness, and an experiment runner with deterministic CSV/JSON
output.
"""

__version__ = "0.1.0"

from ._backend import available_backends, backend_name, set_backend, warmup
from .attack import AttackReport, attack_statistic, attack_statistics, membership_experiment
from .datagen import (
    CovarianceSpec,
    GroundTruth,
    TailParams,
    check_covariance,
    check_fourth_moment,
    check_symmetry_moment,
    check_tail,
    generate_dataset,
    sample_w_star,
)
from .model import (
    Dataset,
    LabeledExample,
    empirical_risk,
    excess_risk,
    excess_risk_detail,
    glmtron_gradient,
    param_error_h,
    population_risk_mc,
    predict,
    relu,
    sgd_gradient,
)
from .privacy import (
    PrivacyParams,
    ZcdpLedger,
    calibrate_shuffle_multiplier,
    calibrate_zcdp_multiplier,
    gaussian_noise,
    ledger_compose_sequential,
    zcdp_to_approx_dp,
)
from .threshold import ClipScale, ThresholdParams, clip, count_within, dp_threshold, make_clip_scale
from .trainers import (
    TrainerConfig,
    TrainTrace,
    average_iterates,
    permute,
    run_dp_glmtron,
    run_dp_mbglmtron,
    run_dp_sgd,
    run_glmtron,
)

__all__ = [name for name in dir() if not name.startswith("_")]
