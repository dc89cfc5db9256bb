"""Isotonic recalibration of average calibration.

The recalibration map g is the least-squares nondecreasing fit (pool adjacent
violators, equal weights) of observed coverage proportions against expected
levels, pinned to the boundary knots (0, 0) and (1, 1) and interpolated
linearly between knots.  Composing g with a predicted CDF yields calibrated
probabilities; equivalently, the recalibrated quantile at level p is the
original quantile at g^{-1}(p), where g^{-1} is the generalized (infimum)
inverse so flat stretches of g resolve to their left edge.

The pipeline fits on one split and evaluates on another.  Recalibration only
reshapes the probability axis, so only quantile-based metrics change: ECE,
check, interval, and the calibration curve are recomputed; RMSE and MAE ride
on the unchanged predicted means; NLL, CRPS, and sharpness have no exact
analogue under a reweighted CDF and are carried over from the uncalibrated
report, flagged as such.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .calibration import CalibrationCurve, calibration_curve
from .core import (
    EvalDataset,
    PredictionSet,
    ProbGrid,
    ShapeError,
    ValidationError,
    _std_quantile_array,
    validate,
)
from .scoring import MetricReport, metric_report

__all__ = [
    "RecalibrationMap",
    "RecalibrationResult",
    "fit_isotonic",
    "apply_map",
    "recalibrate_quantiles",
    "recalibration_pipeline",
    "CARRIED_OVER_METRICS",
]

CARRIED_OVER_METRICS = ("nll", "crps", "sharpness")


@dataclass(frozen=True)
class RecalibrationMap:
    """Piecewise-linear nondecreasing map on [0, 1] with g(0)=0, g(1)=1."""

    knots_x: np.ndarray
    knots_y: np.ndarray

    def __post_init__(self) -> None:
        kx = np.asarray(self.knots_x, dtype=float)
        ky = np.asarray(self.knots_y, dtype=float)
        if kx.ndim != 1 or kx.shape != ky.shape:
            raise ShapeError("knot vectors must be equal-length 1-d arrays")
        if kx.shape[0] < 2:
            raise ValidationError("at least two knots are required")
        if not (np.diff(kx) > 0.0).all():
            raise ValidationError("knot x values must be strictly increasing")
        if kx[0] != 0.0 or kx[-1] != 1.0:
            raise ValidationError("knot x values must start at 0 and end at 1")
        if (np.diff(ky) < 0.0).any():
            raise ValidationError("knot y values must be nondecreasing")
        if ky[0] != 0.0 or ky[-1] != 1.0:
            raise ValidationError("knot y values must start at 0 and end at 1")
        kx.setflags(write=False)
        ky.setflags(write=False)
        object.__setattr__(self, "knots_x", kx)
        object.__setattr__(self, "knots_y", ky)

    def to_dict(self) -> dict:
        return {
            "knots_x": [float(v) for v in self.knots_x],
            "knots_y": [float(v) for v in self.knots_y],
        }

    @classmethod
    def from_dict(cls, payload: dict) -> "RecalibrationMap":
        try:
            return cls(np.asarray(payload["knots_x"]), np.asarray(payload["knots_y"]))
        except KeyError as exc:
            raise ValidationError(f"recalibration map payload misses key {exc}") from exc


def _pava(values: np.ndarray) -> np.ndarray:
    """Least-squares nondecreasing fit with equal weights (stack form)."""
    vals: list[float] = []
    counts: list[int] = []
    for v in values:
        vals.append(float(v))
        counts.append(1)
        while len(vals) > 1 and vals[-2] > vals[-1]:
            v2, c2 = vals.pop(), counts.pop()
            v1, c1 = vals.pop(), counts.pop()
            vals.append((v1 * c1 + v2 * c2) / (c1 + c2))
            counts.append(c1 + c2)
    return np.repeat(vals, counts)


def fit_isotonic(expected, observed) -> RecalibrationMap:
    """Fit the recalibration map from a calibration curve.

    Parameters
    ----------
    expected : array_like
        Strictly increasing levels, all strictly inside (0, 1) so the
        boundary knots can be appended.
    observed : array_like
        Observed coverage proportions in [0, 1], same length, at least 2.

    Returns
    -------
    RecalibrationMap
        Knots (0, 0), (expected, pooled observed), (1, 1).
    """
    expected = np.asarray(expected, dtype=float)
    observed = np.asarray(observed, dtype=float)
    if expected.ndim != 1 or expected.shape != observed.shape:
        raise ShapeError("expected and observed must be equal-length vectors")
    if expected.shape[0] < 2:
        raise ValidationError("at least two calibration points are required")
    if not (np.diff(expected) > 0.0).all():
        raise ValidationError("expected levels must be strictly increasing")
    if (expected <= 0.0).any() or (expected >= 1.0).any():
        raise ValidationError("expected levels must lie strictly inside (0, 1)")
    if ((observed < 0.0) | (observed > 1.0)).any() or not np.isfinite(observed).all():
        raise ValidationError("observed proportions must lie in [0, 1]")
    fitted = np.clip(_pava(observed), 0.0, 1.0)
    kx = np.concatenate(([0.0], expected, [1.0]))
    ky = np.concatenate(([0.0], fitted, [1.0]))
    return RecalibrationMap(kx, ky)


def apply_map(rmap: RecalibrationMap, p):
    """Evaluate g at p (scalar or array); p must lie within [0, 1]."""
    arr = np.asarray(p, dtype=float)
    if ((arr < 0.0) | (arr > 1.0)).any() or not np.isfinite(arr).all():
        raise ValidationError("map input must lie within [0, 1]")
    out = np.interp(arr, rmap.knots_x, rmap.knots_y)
    return float(out) if np.isscalar(p) else out


def _inverse_map(rmap: RecalibrationMap, p: np.ndarray) -> np.ndarray:
    """Generalized inverse: inf{t : g(t) >= p}, elementwise."""
    kx, ky = rmap.knots_x, rmap.knots_y
    p = np.asarray(p, dtype=float)
    idx = np.searchsorted(ky, p, side="left")
    # ky[0] = 0 <= p, so idx == 0 only when p == 0 and the infimum is 0.
    out = np.zeros(p.shape)
    pos = idx > 0
    i = idx[pos]
    y0, y1 = ky[i - 1], ky[i]
    x0, x1 = kx[i - 1], kx[i]
    # side="left" guarantees y0 < p <= y1 here, so the segment has slope.
    out[pos] = x0 + (p[pos] - y0) / (y1 - y0) * (x1 - x0)
    return out


def _recalibrated_quantiles_at(
    preds: PredictionSet, rmap: RecalibrationMap, levels: np.ndarray
) -> np.ndarray:
    """(n, k) recalibrated quantiles: original quantiles at g^{-1}(level)."""
    raw_levels = _inverse_map(rmap, levels)
    z = _std_quantile_array(raw_levels)
    return preds.means[:, None] + preds.stddevs[:, None] * z[None, :]


def recalibrate_quantiles(
    preds: PredictionSet, rmap: RecalibrationMap, grid: ProbGrid
) -> np.ndarray:
    """Per-point recalibrated quantile table over the grid.

    Row i holds the recalibrated quantiles of point i at each grid level;
    rows are nondecreasing because both g^{-1} and the Gaussian quantile are.
    """
    if not isinstance(preds, PredictionSet):
        raise ValidationError(f"expected a PredictionSet, got {type(preds).__name__}")
    return _recalibrated_quantiles_at(preds, rmap, grid.probs)


@dataclass(frozen=True)
class RecalibrationResult:
    """Everything the pipeline produced.

    ``after`` recomputes only the quantile-based metrics (ece, check,
    interval, calibration curve); rmse and mae are unchanged by construction;
    the metrics named in ``carried_over`` are copied from ``before`` because
    they are not defined by the recalibrated quantiles alone.
    """

    map: RecalibrationMap
    quantile_table: np.ndarray
    before: MetricReport
    after: MetricReport
    carried_over: tuple[str, ...] = CARRIED_OVER_METRICS


def recalibration_pipeline(
    preds_recal: PredictionSet,
    data_recal: EvalDataset,
    preds_test: PredictionSet,
    data_test: EvalDataset,
    grid: ProbGrid,
) -> RecalibrationResult:
    """Fit on the recalibration split, evaluate on the test split."""
    validate(preds_recal, data_recal)
    validate(preds_test, data_test)
    curve = calibration_curve(preds_recal, data_recal, grid)
    rmap = fit_isotonic(curve.expected, curve.observed)

    qtable = recalibrate_quantiles(preds_test, rmap, grid)
    before = metric_report(preds_test, data_test, grid)

    y = data_test.targets[:, None]
    observed_after = (y <= qtable).mean(axis=0)
    curve_after = CalibrationCurve(grid.probs, observed_after)
    ece_after = float(np.mean(np.abs(observed_after - grid.probs)))

    u = y - qtable
    check_after = float(
        np.mean(np.where(u >= 0.0, grid.probs[None, :] * u, (grid.probs[None, :] - 1.0) * u))
    )

    # Interval endpoints sit at levels (1 -+ p)/2, which the grid table does
    # not hold; evaluate the recalibrated quantile function there directly.
    alpha = 1.0 - grid.probs
    lo = _recalibrated_quantiles_at(preds_test, rmap, alpha / 2.0)
    hi = _recalibrated_quantiles_at(preds_test, rmap, 1.0 - alpha / 2.0)
    width = hi - lo
    below = np.where(y < lo, lo - y, 0.0)
    above = np.where(y > hi, y - hi, 0.0)
    interval_after = float(np.mean(width + (2.0 / alpha)[None, :] * (below + above)))

    after = MetricReport(
        rmse=before.rmse,
        mae=before.mae,
        ece=ece_after,
        sharpness=before.sharpness,
        nll=before.nll,
        crps=before.crps,
        check=check_after,
        interval=interval_after,
        calibration_curve=curve_after,
        adv_group_curve=None,
    )
    return RecalibrationResult(
        map=rmap, quantile_table=qtable, before=before, after=after
    )
