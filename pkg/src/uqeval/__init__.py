"""Evaluation, visualization, and improvement of uncertainty estimates for
regression models that predict a Gaussian per point."""

__version__ = "0.1.0"

from .core import (
    ConfigurationError,
    EmptyInputError,
    EvalDataset,
    NumericError,
    PredictionSet,
    ProbGrid,
    ShapeError,
    UQError,
    ValidationError,
    default_grid,
    gaussian_cdf,
    gaussian_quantile,
    validate,
)
from .calibration import (
    AdvConfig,
    AdvGroupCurve,
    CalibrationCurve,
    GroupSpec,
    adversarial_group_calibration,
    calibration_curve,
    ece,
    group_ece,
    observed_proportion,
)
from .scoring import (
    SCALAR_METRICS,
    MetricReport,
    check_score,
    crps,
    interval_score,
    mae,
    metric_report,
    nll,
    rmse,
    sharpness,
)
from .recalibration import (
    CARRIED_OVER_METRICS,
    RecalibrationMap,
    RecalibrationResult,
    apply_map,
    fit_isotonic,
    recalibrate_quantiles,
    recalibration_pipeline,
)
from .pnn import (
    LOSS_KINDS,
    PNNModel,
    TrainConfig,
    TrainingCurves,
    loss_and_grad,
    train,
)
from .casestudy import (
    GROUND_TRUTH,
    CaseStudyResult,
    SynthConfig,
    SynthData,
    aggregate_reports,
    format_aggregate_table,
    generate_synthetic,
    pooled_dataset,
    ground_truth_predictions,
    run_case_study,
    true_mean,
    true_noise_sd,
)
from .plotting import (
    AdversarialSeries,
    BandSeries,
    CalibrationSeries,
    IntervalSeries,
    PlotBundle,
    TrainingSeries,
    build_plot_bundle,
    read_plot_data,
    render_svg,
    write_plot_data,
)
from .fileio import (
    read_prediction_file,
    read_report,
    report_from_dict,
    report_to_dict,
    write_prediction_file,
    write_report,
)

__all__ = [
    "__version__",
    # core
    "ConfigurationError",
    "EmptyInputError",
    "EvalDataset",
    "NumericError",
    "PredictionSet",
    "ProbGrid",
    "ShapeError",
    "UQError",
    "ValidationError",
    "default_grid",
    "gaussian_cdf",
    "gaussian_quantile",
    "validate",
    # calibration
    "AdvConfig",
    "AdvGroupCurve",
    "CalibrationCurve",
    "GroupSpec",
    "adversarial_group_calibration",
    "calibration_curve",
    "ece",
    "group_ece",
    "observed_proportion",
    # scoring
    "SCALAR_METRICS",
    "MetricReport",
    "check_score",
    "crps",
    "interval_score",
    "mae",
    "metric_report",
    "nll",
    "rmse",
    "sharpness",
    # recalibration
    "CARRIED_OVER_METRICS",
    "RecalibrationMap",
    "RecalibrationResult",
    "apply_map",
    "fit_isotonic",
    "recalibrate_quantiles",
    "recalibration_pipeline",
    # network
    "LOSS_KINDS",
    "PNNModel",
    "TrainConfig",
    "TrainingCurves",
    "loss_and_grad",
    "train",
    # case study
    "GROUND_TRUTH",
    "CaseStudyResult",
    "SynthConfig",
    "SynthData",
    "aggregate_reports",
    "format_aggregate_table",
    "generate_synthetic",
    "pooled_dataset",
    "ground_truth_predictions",
    "run_case_study",
    "true_mean",
    "true_noise_sd",
    # plotting
    "AdversarialSeries",
    "BandSeries",
    "CalibrationSeries",
    "IntervalSeries",
    "PlotBundle",
    "TrainingSeries",
    "build_plot_bundle",
    "read_plot_data",
    "render_svg",
    "write_plot_data",
    # file I/O
    "read_prediction_file",
    "read_report",
    "report_from_dict",
    "report_to_dict",
    "write_prediction_file",
    "write_report",
]
