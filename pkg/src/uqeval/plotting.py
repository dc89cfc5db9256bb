"""Structured plot data and static SVG renderings.

Five figure families are supported: the confidence band over inputs, the
ordered prediction intervals, the calibration curve against the diagonal,
the per-epoch training trace (calibration on the left axis, sharpness on
the right), and the adversarial group-calibration curve with its stderr
band.

The numeric side and the drawing side are split on purpose.  A PlotBundle
holds the exact series; write_plot_data serializes each series to a
comma-separated file whose floats round-trip bitwise (repr formatting),
plus a manifest naming what was written and what was omitted.  read_plot_data
inverts that, so figures can be re-rendered later without recomputing
anything.  render_svg draws the bundle with matplotlib under pinned
rc settings (fixed hash salt, no path simplification, no date metadata),
which makes the SVG output byte-identical across runs.
"""

from __future__ import annotations

import csv
import json
import math
import os
from dataclasses import dataclass

import matplotlib
from matplotlib.figure import Figure

import numpy as np

from .calibration import AdvGroupCurve, CalibrationCurve, calibration_curve
from .core import (
    EvalDataset,
    PredictionSet,
    ProbGrid,
    ShapeError,
    ValidationError,
    _as_float_vector,
    _std_quantile,
    default_grid,
    validate,
)
from .pnn import TrainingCurves

__all__ = [
    "BandSeries",
    "IntervalSeries",
    "CalibrationSeries",
    "TrainingSeries",
    "AdversarialSeries",
    "PlotBundle",
    "build_plot_bundle",
    "write_plot_data",
    "read_plot_data",
    "render_svg",
    "MANIFEST_NAME",
    "SERIES_FILES",
    "FIGURE_FILES",
]

MANIFEST_NAME = "manifest.json"

SERIES_FILES = {
    "band": "band.csv",
    "intervals": "intervals.csv",
    "calibration": "calibration.csv",
    "training": "training.csv",
    "adversarial": "adversarial.csv",
}

FIGURE_FILES = {
    "band": "confidence_band.svg",
    "intervals": "ordered_intervals.svg",
    "calibration": "calibration.svg",
    "training": "training_curves.svg",
    "adversarial": "adversarial_group.svg",
}

# Pinned draw settings: a fixed hash salt makes matplotlib's internal SVG ids
# reproducible, and disabling path simplification keeps every data vertex in
# the emitted coordinates so geometric checks can read them back.
_RC = {"svg.hashsalt": "uqeval", "path.simplify": False}


def _series_arrays(obj, names: tuple[str, ...]) -> None:
    n = None
    for name in names:
        arr = _as_float_vector(getattr(obj, name), name)
        if not np.isfinite(arr).all():
            raise ValidationError(f"{name} contains a non-finite value")
        if n is None:
            n = arr.shape[0]
        elif arr.shape[0] != n:
            raise ShapeError(f"{name} has length {arr.shape[0]}, expected {n}")
        arr.setflags(write=False)
        object.__setattr__(obj, name, arr)
    if n == 0:
        raise ValidationError("plot series cannot be empty")


def _require_strictly_increasing(arr: np.ndarray, name: str) -> None:
    if arr.shape[0] > 1 and not np.all(np.diff(arr) > 0):
        raise ValidationError(f"{name} must be strictly increasing")


@dataclass(frozen=True)
class BandSeries:
    """Observations over the input with the predicted mean and central band."""

    x: np.ndarray
    mean: np.ndarray
    lo: np.ndarray
    hi: np.ndarray
    y: np.ndarray

    def __post_init__(self) -> None:
        _series_arrays(self, ("x", "mean", "lo", "hi", "y"))
        _require_strictly_increasing(self.x, "band x")
        if np.any(self.lo > self.hi):
            raise ValidationError("band lo must not exceed hi")


@dataclass(frozen=True)
class IntervalSeries:
    """Targets in sorted order with their central prediction intervals."""

    pos: np.ndarray
    y: np.ndarray
    mean: np.ndarray
    lo: np.ndarray
    hi: np.ndarray

    def __post_init__(self) -> None:
        _series_arrays(self, ("pos", "y", "mean", "lo", "hi"))
        _require_strictly_increasing(self.pos, "interval pos")
        if np.any(np.diff(self.y) < 0):
            raise ValidationError("interval y must be sorted ascending")
        if np.any(self.lo > self.hi):
            raise ValidationError("interval lo must not exceed hi")


@dataclass(frozen=True)
class CalibrationSeries:
    """Observed vs expected coverage across levels, plus the diagonal."""

    expected: np.ndarray
    observed: np.ndarray

    def __post_init__(self) -> None:
        _series_arrays(self, ("expected", "observed"))
        _require_strictly_increasing(self.expected, "calibration expected")
        if self.expected[0] <= 0.0 or self.expected[-1] >= 1.0:
            raise ValidationError("calibration expected must lie inside (0, 1)")
        if np.any(self.observed < 0.0) or np.any(self.observed > 1.0):
            raise ValidationError("calibration observed must lie in [0, 1]")

    @property
    def diagonal(self) -> np.ndarray:
        return self.expected


@dataclass(frozen=True)
class TrainingSeries:
    """Per-epoch test calibration error and sharpness during training."""

    epoch: np.ndarray
    ece: np.ndarray
    sharpness: np.ndarray
    best_epoch: int | None = None
    gt_sharpness: float | None = None

    def __post_init__(self) -> None:
        _series_arrays(self, ("epoch", "ece", "sharpness"))
        _require_strictly_increasing(self.epoch, "training epoch")
        if self.best_epoch is not None:
            if float(self.best_epoch) not in self.epoch:
                raise ValidationError(
                    f"best_epoch {self.best_epoch} is not in the epoch series"
                )
        if self.gt_sharpness is not None and not (
            math.isfinite(self.gt_sharpness) and self.gt_sharpness > 0.0
        ):
            raise ValidationError("gt_sharpness must be finite and positive")


@dataclass(frozen=True)
class AdversarialSeries:
    """Worst-subset calibration error as a function of group fraction."""

    fraction: np.ndarray
    mean_worst_ece: np.ndarray
    stderr: np.ndarray

    def __post_init__(self) -> None:
        _series_arrays(self, ("fraction", "mean_worst_ece", "stderr"))
        _require_strictly_increasing(self.fraction, "adversarial fraction")
        if np.any(self.stderr < 0.0):
            raise ValidationError("adversarial stderr must be non-negative")


@dataclass(frozen=True)
class PlotBundle:
    """Exact numeric content behind one prediction set's figures.

    The training and adversarial series are optional; the other three can
    always be assembled from predictions and data alone.
    """

    band: BandSeries
    intervals: IntervalSeries
    calibration: CalibrationSeries
    training: TrainingSeries | None = None
    adversarial: AdversarialSeries | None = None

    def __post_init__(self) -> None:
        if not isinstance(self.band, BandSeries):
            raise ValidationError("band must be a BandSeries")
        if not isinstance(self.intervals, IntervalSeries):
            raise ValidationError("intervals must be an IntervalSeries")
        if not isinstance(self.calibration, CalibrationSeries):
            raise ValidationError("calibration must be a CalibrationSeries")
        if self.training is not None and not isinstance(self.training, TrainingSeries):
            raise ValidationError("training must be a TrainingSeries or None")
        if self.adversarial is not None and not isinstance(
            self.adversarial, AdversarialSeries
        ):
            raise ValidationError("adversarial must be an AdversarialSeries or None")


def build_plot_bundle(
    preds: PredictionSet,
    data: EvalDataset,
    grid: ProbGrid | None = None,
    curves: TrainingCurves | None = None,
    adv: AdvGroupCurve | None = None,
    band_multiple: float = 2.0,
    interval_coverage: float = 0.95,
) -> PlotBundle:
    """Assemble every series available for one prediction set.

    The confidence band spans mean +/- band_multiple * stddev.  Interval
    endpoints cover the central ``interval_coverage`` mass.  The band's x
    axis is the first input feature; datasets without features fall back to
    the point index.  The calibration series is exactly the curve from the
    calibration module, no recomputation or smoothing.
    """
    validate(preds, data)
    if grid is None:
        grid = default_grid()
    if not (math.isfinite(band_multiple) and band_multiple > 0.0):
        raise ValidationError(f"band_multiple must be > 0, got {band_multiple}")
    if not (0.0 < interval_coverage < 1.0):
        raise ValidationError(
            f"interval_coverage must be in (0, 1), got {interval_coverage}"
        )

    n = len(preds)
    if data.inputs.shape[1] >= 1:
        x = data.inputs[:, 0]
    else:
        x = np.arange(n, dtype=float)
    order = np.argsort(x, kind="stable")
    xs = x[order]
    if n > 1 and not np.all(np.diff(xs) > 0):
        raise ValidationError("band x values must be distinct to order the series")
    band = BandSeries(
        x=xs,
        mean=preds.means[order],
        lo=preds.means[order] - band_multiple * preds.stddevs[order],
        hi=preds.means[order] + band_multiple * preds.stddevs[order],
        y=data.targets[order],
    )

    z_hi = _std_quantile(0.5 + 0.5 * interval_coverage)
    y_order = np.argsort(data.targets, kind="stable")
    mu_s = preds.means[y_order]
    sd_s = preds.stddevs[y_order]
    intervals = IntervalSeries(
        pos=np.arange(n, dtype=float),
        y=data.targets[y_order],
        mean=mu_s,
        lo=mu_s - z_hi * sd_s,
        hi=mu_s + z_hi * sd_s,
    )

    curve: CalibrationCurve = calibration_curve(preds, data, grid)
    calibration = CalibrationSeries(expected=curve.expected, observed=curve.observed)

    training = None
    if curves is not None and len(curves) > 0:
        training = TrainingSeries(
            epoch=np.arange(len(curves), dtype=float),
            ece=curves.test_ece,
            sharpness=curves.test_sharpness,
            best_epoch=curves.best_epoch,
            gt_sharpness=curves.gt_sharpness,
        )

    adversarial = None
    if adv is not None:
        adversarial = AdversarialSeries(
            fraction=adv.group_fractions,
            mean_worst_ece=adv.mean_worst_ece,
            stderr=adv.stderr,
        )

    return PlotBundle(
        band=band,
        intervals=intervals,
        calibration=calibration,
        training=training,
        adversarial=adversarial,
    )


_SERIES_COLUMNS = {
    "band": ("x", "mean", "lo", "hi", "y"),
    "intervals": ("pos", "y", "mean", "lo", "hi"),
    "calibration": ("expected", "observed", "diagonal"),
    "training": ("epoch", "ece", "sharpness"),
    "adversarial": ("fraction", "mean_worst_ece", "stderr"),
}


def _write_series_csv(path: str, columns: tuple[str, ...], arrays: list[np.ndarray]):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(columns)
        for row in zip(*arrays):
            writer.writerow([repr(float(v)) for v in row])


def write_plot_data(bundle: PlotBundle, directory: str) -> dict[str, str]:
    """Write one CSV per present series plus a manifest; returns name -> path.

    Floats are formatted with repr, so re-parsing reproduces the bundle
    bitwise.  Absent optional series are skipped and listed under "omitted"
    in the manifest.  Output is byte-stable for identical bundles.
    """
    os.makedirs(directory, exist_ok=True)
    series_data: dict[str, list[np.ndarray]] = {
        "band": [bundle.band.x, bundle.band.mean, bundle.band.lo,
                 bundle.band.hi, bundle.band.y],
        "intervals": [bundle.intervals.pos, bundle.intervals.y,
                      bundle.intervals.mean, bundle.intervals.lo,
                      bundle.intervals.hi],
        "calibration": [bundle.calibration.expected, bundle.calibration.observed,
                        bundle.calibration.diagonal],
    }
    if bundle.training is not None:
        series_data["training"] = [bundle.training.epoch, bundle.training.ece,
                                   bundle.training.sharpness]
    if bundle.adversarial is not None:
        series_data["adversarial"] = [bundle.adversarial.fraction,
                                      bundle.adversarial.mean_worst_ece,
                                      bundle.adversarial.stderr]

    written: dict[str, str] = {}
    files: dict[str, str] = {}
    for name in SERIES_FILES:
        if name not in series_data:
            continue
        path = os.path.join(directory, SERIES_FILES[name])
        try:
            _write_series_csv(path, _SERIES_COLUMNS[name], series_data[name])
        except OSError as exc:
            raise ValidationError(f"cannot write plot data file {path}: {exc}") from exc
        written[name] = path
        files[name] = SERIES_FILES[name]

    scalars: dict[str, object] = {}
    if bundle.training is not None:
        scalars["best_epoch"] = (
            None if bundle.training.best_epoch is None
            else int(bundle.training.best_epoch)
        )
        scalars["gt_sharpness"] = bundle.training.gt_sharpness
    manifest = {
        "files": files,
        "omitted": sorted(set(SERIES_FILES) - set(files)),
        "scalars": scalars,
    }
    manifest_path = os.path.join(directory, MANIFEST_NAME)
    with open(manifest_path, "w", encoding="utf-8", newline="") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    written["manifest"] = manifest_path
    return written


def _read_series_csv(path: str, columns: tuple[str, ...]) -> list[np.ndarray]:
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != list(columns):
            raise ValidationError(
                f"{os.path.basename(path)}: expected header {','.join(columns)}, "
                f"got {header}"
            )
        rows = []
        for i, row in enumerate(reader):
            if len(row) != len(columns):
                raise ValidationError(
                    f"{os.path.basename(path)}: row {i + 1} has {len(row)} fields, "
                    f"expected {len(columns)}"
                )
            try:
                rows.append([float(v) for v in row])
            except ValueError as exc:
                raise ValidationError(
                    f"{os.path.basename(path)}: row {i + 1}: {exc}"
                ) from exc
    if not rows:
        raise ValidationError(f"{os.path.basename(path)}: no data rows")
    mat = np.array(rows, dtype=float)
    return [mat[:, j] for j in range(len(columns))]


def read_plot_data(directory: str) -> PlotBundle:
    """Rebuild the PlotBundle written by write_plot_data.

    A series listed in the manifest whose file is missing is an error naming
    that file; series recorded as omitted are simply absent from the result.
    """
    manifest_path = os.path.join(directory, MANIFEST_NAME)
    if not os.path.isfile(manifest_path):
        raise ValidationError(f"missing plot data manifest: {manifest_path}")
    with open(manifest_path, "r", encoding="utf-8") as fh:
        try:
            manifest = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ValidationError(f"malformed manifest {manifest_path}: {exc}") from exc
    files = manifest.get("files", {})
    for required in ("band", "intervals", "calibration"):
        if required not in files:
            raise ValidationError(f"manifest lists no {required} series")

    loaded: dict[str, list[np.ndarray]] = {}
    for name, filename in files.items():
        if name not in SERIES_FILES:
            raise ValidationError(f"manifest lists unknown series {name!r}")
        path = os.path.join(directory, filename)
        if not os.path.isfile(path):
            raise ValidationError(
                f"manifest lists {name} series but {filename} is missing"
            )
        loaded[name] = _read_series_csv(path, _SERIES_COLUMNS[name])

    expected, observed, diagonal = loaded["calibration"]
    if not np.array_equal(diagonal, expected):
        raise ValidationError("calibration.csv: diagonal column must equal expected")

    training = None
    if "training" in loaded:
        scalars = manifest.get("scalars", {})
        best = scalars.get("best_epoch")
        gt = scalars.get("gt_sharpness")
        training = TrainingSeries(
            epoch=loaded["training"][0],
            ece=loaded["training"][1],
            sharpness=loaded["training"][2],
            best_epoch=None if best is None else int(best),
            gt_sharpness=None if gt is None else float(gt),
        )
    adversarial = None
    if "adversarial" in loaded:
        adversarial = AdversarialSeries(
            fraction=loaded["adversarial"][0],
            mean_worst_ece=loaded["adversarial"][1],
            stderr=loaded["adversarial"][2],
        )
    return PlotBundle(
        band=BandSeries(*loaded["band"]),
        intervals=IntervalSeries(*loaded["intervals"]),
        calibration=CalibrationSeries(expected, observed),
        training=training,
        adversarial=adversarial,
    )


def _new_axes(title: str, xlabel: str, ylabel: str):
    fig = Figure(figsize=(6.4, 4.8), dpi=100)
    ax = fig.add_subplot(111)
    ax.set_title(title)
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    return fig, ax


def _save(fig: Figure, path: str) -> None:
    with matplotlib.rc_context(_RC):
        # Dropping the date stamp is what makes re-renders byte-identical.
        fig.savefig(path, format="svg", metadata={"Date": None})


def _render_band(bundle: PlotBundle, path: str) -> None:
    s = bundle.band
    fig, ax = _new_axes("Predictions with confidence band", "x", "y")
    fill = ax.fill_between(s.x, s.lo, s.hi, alpha=0.3, color="tab:blue",
                           label="confidence band")
    fill.set_gid("band-fill")
    (lo_line,) = ax.plot(s.x, s.lo, color="tab:blue", linewidth=0.8)
    lo_line.set_gid("band-lo")
    (hi_line,) = ax.plot(s.x, s.hi, color="tab:blue", linewidth=0.8)
    hi_line.set_gid("band-hi")
    (mean_line,) = ax.plot(s.x, s.mean, color="tab:blue", label="predicted mean")
    mean_line.set_gid("band-mean")
    dots = ax.scatter(s.x, s.y, s=12, color="black", label="observations")
    dots.set_gid("band-observations")
    ax.legend(loc="best")
    _save(fig, path)


def _render_intervals(bundle: PlotBundle, path: str) -> None:
    s = bundle.intervals
    fig, ax = _new_axes("Ordered prediction intervals", "point (sorted by target)",
                        "y")
    bars = ax.vlines(s.pos, s.lo, s.hi, color="tab:blue", alpha=0.6,
                     label="central interval")
    bars.set_gid("interval-band")
    mean_dots = ax.scatter(s.pos, s.mean, s=10, color="tab:blue",
                           label="predicted mean")
    mean_dots.set_gid("interval-mean")
    obs_dots = ax.scatter(s.pos, s.y, s=10, color="black", label="observations")
    obs_dots.set_gid("interval-observations")
    ax.legend(loc="best")
    _save(fig, path)


def _render_calibration(bundle: PlotBundle, path: str) -> None:
    s = bundle.calibration
    fig, ax = _new_axes("Average calibration", "expected proportion",
                        "observed proportion")
    (diag,) = ax.plot([0.0, 1.0], [0.0, 1.0], color="gray", linestyle="--",
                      label="ideal")
    diag.set_gid("cal-diagonal")
    (curve,) = ax.plot(s.expected, s.observed, color="tab:blue",
                       label="calibration curve")
    curve.set_gid("cal-curve")
    ax.set_xlim(0.0, 1.0)
    ax.set_ylim(0.0, 1.0)
    ax.legend(loc="best")
    _save(fig, path)


def _render_training(bundle: PlotBundle, path: str) -> None:
    s = bundle.training
    fig, ax = _new_axes("Training trace", "epoch", "test calibration error")
    (ece_line,) = ax.plot(s.epoch, s.ece, color="tab:blue", label="calibration error")
    ece_line.set_gid("train-ece")
    ax2 = ax.twinx()
    ax2.set_ylabel("test sharpness")
    (sharp_line,) = ax2.plot(s.epoch, s.sharpness, color="tab:orange",
                             label="sharpness")
    sharp_line.set_gid("train-sharpness")
    handles = [ece_line, sharp_line]
    if s.gt_sharpness is not None:
        gt_line = ax2.axhline(s.gt_sharpness, color="tab:orange", linestyle=":",
                              label="true sharpness")
        gt_line.set_gid("train-gt-sharpness")
        handles.append(gt_line)
    if s.best_epoch is not None:
        best_line = ax.axvline(float(s.best_epoch), color="gray", linestyle="--",
                               label="best validation epoch")
        best_line.set_gid("train-best-epoch")
        handles.append(best_line)
    ax.legend(handles=handles, loc="best")
    _save(fig, path)


def _render_adversarial(bundle: PlotBundle, path: str) -> None:
    s = bundle.adversarial
    fig, ax = _new_axes("Adversarial group calibration", "group size fraction",
                        "mean worst-group calibration error")
    band = ax.fill_between(s.fraction, s.mean_worst_ece - s.stderr,
                           s.mean_worst_ece + s.stderr, alpha=0.3,
                           color="tab:blue", label="+/- 1 stderr")
    band.set_gid("adv-stderr-band")
    (line,) = ax.plot(s.fraction, s.mean_worst_ece, color="tab:blue",
                      label="mean worst-group error")
    line.set_gid("adv-mean")
    ax.legend(loc="best")
    _save(fig, path)


_RENDERERS = {
    "band": _render_band,
    "intervals": _render_intervals,
    "calibration": _render_calibration,
    "training": _render_training,
    "adversarial": _render_adversarial,
}


def render_svg(bundle: PlotBundle, directory: str) -> dict[str, str]:
    """Render one SVG per present figure family; returns name -> path.

    Output bytes depend only on the bundle contents: identical bundles give
    identical files.
    """
    os.makedirs(directory, exist_ok=True)
    rendered: dict[str, str] = {}
    for name, renderer in _RENDERERS.items():
        if name == "training" and bundle.training is None:
            continue
        if name == "adversarial" and bundle.adversarial is None:
            continue
        path = os.path.join(directory, FIGURE_FILES[name])
        try:
            renderer(bundle, path)
        except OSError as exc:
            raise ValidationError(f"cannot write figure {path}: {exc}") from exc
        rendered[name] = path
    return rendered
