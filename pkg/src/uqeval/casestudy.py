"""Synthetic heteroscedastic case study.

One dimensional regression data: inputs uniform on a fixed range, targets
follow y = sin(x/2) + x cos(0.8x) plus zero-mean Gaussian noise whose
stddev is piecewise constant on four equal-width input segments (1.0,
0.01, 1.5, 0.5 from left to right).  Splits hold 200/100/100 points.

The study trains one network per scoring-rule loss on this data, evaluates
every metric on the test split, and puts the analytic ground-truth
predictor (true mean, true noise level) through the identical evaluation
as a reference row.  Aggregation over seeds reports mean and standard
error per metric and method.

Randomness is structured so any (seed, method) cell is reproducible in
isolation: the data stream is seeded by [seed, 0], training streams by
[seed, 1 + loss index], and the adversarial-group draws by [seed, 100]
(ground truth) or [seed, 101 + loss index].
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .calibration import AdvConfig
from .core import (
    ConfigurationError,
    EvalDataset,
    PredictionSet,
    ProbGrid,
    ShapeError,
    ValidationError,
    default_grid,
)
from .fileio import report_to_dict, write_prediction_file, write_report
from .plotting import build_plot_bundle, render_svg, write_plot_data
from .pnn import LOSS_KINDS, TrainConfig, TrainingCurves, train
from .scoring import SCALAR_METRICS, MetricReport, metric_report

__all__ = [
    "SynthConfig",
    "SynthData",
    "true_mean",
    "true_noise_sd",
    "generate_synthetic",
    "pooled_dataset",
    "ground_truth_predictions",
    "GROUND_TRUTH",
    "CaseStudyResult",
    "run_case_study",
    "aggregate_reports",
    "format_aggregate_table",
    "AGGREGATE_NAME",
]

GROUND_TRUTH = "ground_truth"
AGGREGATE_NAME = "aggregate.json"


@dataclass(frozen=True)
class SynthConfig:
    """Data-generation settings; defaults reproduce the study protocol."""

    n_train: int = 200
    n_val: int = 100
    n_test: int = 100
    x_low: float = -10.0
    x_high: float = 10.0
    noise_sds: tuple[float, ...] = (1.0, 0.01, 1.5, 0.5)

    def __post_init__(self) -> None:
        for name in ("n_train", "n_val", "n_test"):
            if getattr(self, name) < 1:
                raise ConfigurationError(f"{name} must be positive")
        if not (
            math.isfinite(self.x_low)
            and math.isfinite(self.x_high)
            and self.x_low < self.x_high
        ):
            raise ConfigurationError(
                f"need x_low < x_high, got [{self.x_low}, {self.x_high}]"
            )
        sds = tuple(float(s) for s in self.noise_sds)
        if not sds or any(not (math.isfinite(s) and s > 0.0) for s in sds):
            raise ConfigurationError("noise_sds must be positive and non-empty")
        object.__setattr__(self, "noise_sds", sds)

    def segment_edges(self) -> np.ndarray:
        return np.linspace(self.x_low, self.x_high, len(self.noise_sds) + 1)


def true_mean(x) -> np.ndarray:
    """Noise-free regression function sin(x/2) + x cos(0.8x)."""
    x = np.asarray(x, dtype=float)
    return np.sin(x / 2.0) + x * np.cos(0.8 * x)


def true_noise_sd(x, cfg: SynthConfig | None = None) -> np.ndarray:
    """Noise stddev at x: piecewise constant on equal-width segments."""
    if cfg is None:
        cfg = SynthConfig()
    x = np.asarray(x, dtype=float)
    edges = cfg.segment_edges()
    idx = np.clip(
        np.searchsorted(edges, x, side="right") - 1, 0, len(cfg.noise_sds) - 1
    )
    return np.asarray(cfg.noise_sds)[idx]


@dataclass(frozen=True)
class SynthData:
    """The three splits plus the matching ground-truth predictors."""

    train: EvalDataset
    val: EvalDataset
    test: EvalDataset
    gt_train: PredictionSet
    gt_val: PredictionSet
    gt_test: PredictionSet


def ground_truth_predictions(data: EvalDataset, cfg: SynthConfig | None = None) -> PredictionSet:
    """The oracle predictor: true mean and true noise level per point."""
    if data.inputs.shape[1] < 1:
        raise ShapeError("ground truth needs the input feature column")
    x = data.inputs[:, 0]
    return PredictionSet(true_mean(x), true_noise_sd(x, cfg))


def generate_synthetic(
    cfg: SynthConfig | None = None, rng: int | np.random.Generator | None = 0
) -> SynthData:
    """Draw the train/validation/test splits from one generator, in order."""
    if cfg is None:
        cfg = SynthConfig()
    gen = np.random.default_rng(rng)

    def draw(n: int, split: str) -> EvalDataset:
        x = gen.uniform(cfg.x_low, cfg.x_high, size=n)
        y = true_mean(x) + true_noise_sd(x, cfg) * gen.standard_normal(n)
        return EvalDataset(x.reshape(-1, 1), y, split=split)

    train_ds = draw(cfg.n_train, "train")
    val_ds = draw(cfg.n_val, "validation")
    test_ds = draw(cfg.n_test, "test")
    return SynthData(
        train=train_ds,
        val=val_ds,
        test=test_ds,
        gt_train=ground_truth_predictions(train_ds, cfg),
        gt_val=ground_truth_predictions(val_ds, cfg),
        gt_test=ground_truth_predictions(test_ds, cfg),
    )


def pooled_dataset(data: SynthData) -> EvalDataset:
    """All generated points in draw order, for evaluating the oracle row.

    The oracle needs no training, so no split hygiene applies to it; pooling
    the 400 generated points keeps its metric estimates close to the
    population values that multi-seed summaries are compared against.
    """
    return EvalDataset(
        np.concatenate([data.train.inputs, data.val.inputs, data.test.inputs]),
        np.concatenate([data.train.targets, data.val.targets, data.test.targets]),
        split="test",
    )


@dataclass(frozen=True)
class CaseStudyResult:
    """Everything one run produced, keyed by method name and seed."""

    seeds: tuple[int, ...]
    methods: tuple[str, ...]
    reports: dict[tuple[str, int], MetricReport]
    curves: dict[tuple[str, int], TrainingCurves]
    aggregate: dict[str, dict[str, dict[str, float]]]
    out_dir: str | None = None
    written: tuple[str, ...] = field(default_factory=tuple)


def aggregate_reports(
    reports: dict[tuple[str, int], MetricReport],
    methods: tuple[str, ...],
    seeds: tuple[int, ...],
) -> dict[str, dict[str, dict[str, float]]]:
    """Per-method mean and stderr of every scalar metric across seeds.

    The stderr is the sample standard deviation (ddof 1) over seeds divided
    by sqrt(n_seeds); a single seed reports stderr 0.
    """
    out: dict[str, dict[str, dict[str, float]]] = {}
    for method in methods:
        cells: dict[str, dict[str, float]] = {}
        for metric in SCALAR_METRICS:
            values = np.array(
                [getattr(reports[(method, s)], metric) for s in seeds], dtype=float
            )
            if len(seeds) > 1:
                stderr = float(values.std(ddof=1) / math.sqrt(len(seeds)))
            else:
                stderr = 0.0
            cells[metric] = {"mean": float(values.mean()), "stderr": stderr}
        out[method] = cells
    return out


_TABLE_BLOCKS = (
    ("Accuracy and calibration", ("rmse", "mae", "ece", "sharpness")),
    ("Proper scores", ("nll", "crps", "check", "interval")),
)


def format_aggregate_table(
    aggregate: dict[str, dict[str, dict[str, float]]],
    methods: tuple[str, ...],
    n_seeds: int,
) -> str:
    """Aligned two-block text table, one row per method, mean +/- stderr."""
    lines: list[str] = []
    for title, metrics in _TABLE_BLOCKS:
        header = ["method"] + list(metrics)
        rows = [header]
        for method in methods:
            row = [method]
            for metric in metrics:
                cell = aggregate[method][metric]
                row.append(f"{cell['mean']:.3f} +/- {cell['stderr']:.3f}")
            rows.append(row)
        widths = [max(len(r[j]) for r in rows) for j in range(len(header))]
        lines.append(f"{title} (mean +/- stderr over {n_seeds} seed(s))")
        for i, row in enumerate(rows):
            lines.append("  ".join(cell.ljust(w) for cell, w in zip(row, widths)).rstrip())
            if i == 0:
                lines.append("  ".join("-" * w for w in widths))
        lines.append("")
    return "\n".join(lines).rstrip() + "\n"


def _write_method_outputs(
    directory: str,
    preds: PredictionSet,
    test: EvalDataset,
    report: MetricReport,
    grid: ProbGrid,
    seed: int,
    curves: TrainingCurves | None,
) -> list[str]:
    os.makedirs(directory, exist_ok=True)
    written = []
    pred_path = os.path.join(directory, "predictions.csv")
    write_prediction_file(pred_path, preds, test)
    written.append(pred_path)
    report_path = os.path.join(directory, "report.json")
    write_report(report_path, report_to_dict(report, grid, seed=seed))
    written.append(report_path)
    bundle = build_plot_bundle(
        preds, test, grid=grid, curves=curves, adv=report.adv_group_curve
    )
    written.extend(write_plot_data(bundle, os.path.join(directory, "plotdata")).values())
    written.extend(render_svg(bundle, os.path.join(directory, "figures")).values())
    return written


def run_case_study(
    seeds,
    out_dir: str | None = None,
    losses=LOSS_KINDS,
    epochs: int = 2000,
    resample_probs: bool = True,
    synth_cfg: SynthConfig | None = None,
    grid: ProbGrid | None = None,
    adv_cfg: AdvConfig | None = AdvConfig(),
    progress: Callable[[str], None] | None = None,
) -> CaseStudyResult:
    """Run the full study: data, training, evaluation, artifacts, aggregate.

    For each seed one trained model per loss is evaluated on the test split,
    and the ground-truth predictor is evaluated on the pooled generated
    points.  With ``out_dir`` set, each (seed,
    method) cell writes predictions.csv, report.json, plot-data files, and
    SVG figures under ``<out_dir>/seed_<seed>/<method>/``, and the aggregate
    table is stored as JSON at the top level.  The artifact tree is a pure
    function of the arguments, byte for byte.
    """
    seeds = tuple(int(s) for s in seeds)
    if not seeds:
        raise ValidationError("at least one seed is required")
    if len(set(seeds)) != len(seeds):
        raise ValidationError("seeds must be distinct")
    losses = tuple(losses)
    if not losses:
        raise ValidationError("at least one loss is required")
    for kind in losses:
        if kind not in LOSS_KINDS:
            raise ConfigurationError(f"unknown loss {kind!r}, expected {LOSS_KINDS}")
    if len(set(losses)) != len(losses):
        raise ValidationError("losses must be distinct")
    if synth_cfg is None:
        synth_cfg = SynthConfig()
    if grid is None:
        grid = default_grid()

    methods = (GROUND_TRUTH,) + losses
    reports: dict[tuple[str, int], MetricReport] = {}
    curves_by_cell: dict[tuple[str, int], TrainingCurves] = {}
    written: list[str] = []

    for seed in seeds:
        synth = generate_synthetic(synth_cfg, np.random.default_rng([seed, 0]))
        if progress is not None:
            progress(f"seed {seed}: data generated")

        # The oracle row is scored on every generated point, not just the
        # test split; see pooled_dataset.
        pooled = pooled_dataset(synth)
        gt_preds = ground_truth_predictions(pooled, synth_cfg)
        gt_report = metric_report(
            gt_preds, pooled, grid,
            adv_cfg=adv_cfg, rng=np.random.default_rng([seed, 100]),
        )
        reports[(GROUND_TRUTH, seed)] = gt_report
        if out_dir is not None:
            written.extend(_write_method_outputs(
                os.path.join(out_dir, f"seed_{seed}", GROUND_TRUTH),
                gt_preds, pooled, gt_report, grid, seed, None,
            ))
        if progress is not None:
            progress(f"seed {seed}: ground truth evaluated")

        for kind in losses:
            k = LOSS_KINDS.index(kind)
            tcfg = TrainConfig(
                loss=kind, epochs=epochs, resample_probs=resample_probs
            )
            model, curves = train(
                synth.train, synth.val, synth.test, tcfg,
                rng=np.random.default_rng([seed, 1 + k]),
                gt_sharpness=gt_report.sharpness,
            )
            preds = model.predictions(synth.test.inputs)
            report = metric_report(
                preds, synth.test, grid,
                adv_cfg=adv_cfg, rng=np.random.default_rng([seed, 101 + k]),
            )
            reports[(kind, seed)] = report
            curves_by_cell[(kind, seed)] = curves
            if out_dir is not None:
                written.extend(_write_method_outputs(
                    os.path.join(out_dir, f"seed_{seed}", kind),
                    preds, synth.test, report, grid, seed, curves,
                ))
            if progress is not None:
                progress(f"seed {seed}: {kind} trained and evaluated")

    aggregate = aggregate_reports(reports, methods, seeds)
    if out_dir is not None:
        payload = {
            "n_seeds": len(seeds),
            "seeds": list(seeds),
            "methods": aggregate,
            "method_order": list(methods),
        }
        aggregate_path = os.path.join(out_dir, AGGREGATE_NAME)
        write_report(aggregate_path, payload)
        written.append(aggregate_path)

    return CaseStudyResult(
        seeds=seeds,
        methods=methods,
        reports=reports,
        curves=curves_by_cell,
        aggregate=aggregate,
        out_dir=out_dir,
        written=tuple(written),
    )
