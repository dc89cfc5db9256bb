"""Accuracy, sharpness, and proper scoring rules for Gaussian predictions.

All scoring rules use negative orientation: lower is better, and each one is
minimized in expectation by the true predictive distribution (propriety).

Per-point definitions, with z = (y - mu) / sigma:

- negative log likelihood:  0.5*log(2*pi) + log(sigma) + 0.5*z**2
- continuous ranked probability score, closed form for a Gaussian:
      sigma * (z*(2*cdf(z) - 1) + 2*pdf(z) - 1/sqrt(pi))
- check (pinball) score at level p, with u = y - quantile(p):
      p*u if u >= 0 else (p - 1)*u,  averaged over points and grid levels
- interval score at central coverage p, alpha = 1 - p, endpoints
  l = quantile(alpha/2), u = quantile(1 - alpha/2):
      (u - l) + (2/alpha)*(l - y)*I{y < l} + (2/alpha)*(y - u)*I{y > u},
  averaged over points and grid levels.

Sharpness is the root mean square of the predicted standard deviations; it
looks only at the predictions, never the targets.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .calibration import (
    AdvConfig,
    AdvGroupCurve,
    CalibrationCurve,
    adversarial_group_calibration,
    calibration_curve,
)
from .core import (
    EmptyInputError,
    EvalDataset,
    PredictionSet,
    ProbGrid,
    ValidationError,
    _std_cdf_array,
    _std_pdf_array,
    _std_quantile_array,
    validate,
)

__all__ = [
    "MetricReport",
    "rmse",
    "mae",
    "sharpness",
    "nll",
    "crps",
    "check_score",
    "interval_score",
    "metric_report",
]

_HALF_LOG_2PI = 0.5 * math.log(2.0 * math.pi)
_INV_SQRT_PI = 1.0 / math.sqrt(math.pi)

SCALAR_METRICS = ("rmse", "mae", "ece", "sharpness", "nll", "crps", "check", "interval")


@dataclass(frozen=True)
class MetricReport:
    """Every scalar metric plus the calibration curve for one prediction set.

    ``adv_group_curve`` is present only when the adversarial-group search was
    requested; everything else is always filled.
    """

    rmse: float
    mae: float
    ece: float
    sharpness: float
    nll: float
    crps: float
    check: float
    interval: float
    calibration_curve: CalibrationCurve
    adv_group_curve: AdvGroupCurve | None = None

    def __post_init__(self) -> None:
        for name in SCALAR_METRICS:
            v = getattr(self, name)
            if not math.isfinite(v):
                raise ValidationError(f"{name} must be finite, got {v}")
        slack = 1e-12 * max(1.0, abs(self.mae))
        if self.rmse < 0.0 or self.mae < 0.0 or self.rmse + slack < self.mae:
            raise ValidationError(
                f"need rmse >= mae >= 0, got rmse={self.rmse}, mae={self.mae}"
            )
        if not 0.0 <= self.ece <= 1.0:
            raise ValidationError(f"ece must lie in [0, 1], got {self.ece}")
        # On a level grid symmetric around 0.5 (the default grid is), no
        # monotone coverage curve can push the ECE past 0.5.
        exp = self.calibration_curve.expected
        if exp.shape[0] and np.all(np.abs(exp + exp[::-1] - 1.0) <= 1e-9):
            if self.ece > 0.5 + 1e-12:
                raise ValidationError(
                    f"ece must lie in [0, 0.5] on a symmetric grid, got {self.ece}"
                )
        if self.sharpness <= 0.0:
            raise ValidationError(f"sharpness must be > 0, got {self.sharpness}")
        if self.interval <= 0.0:
            raise ValidationError(f"interval must be > 0, got {self.interval}")

    def scalars(self) -> dict[str, float]:
        """The eight scalar metrics, in canonical order."""
        return {name: float(getattr(self, name)) for name in SCALAR_METRICS}


def _residuals(preds: PredictionSet, data: EvalDataset) -> np.ndarray:
    validate(preds, data)
    if len(data) == 0:
        raise EmptyInputError("at least one point is required")
    return data.targets - preds.means


def rmse(preds: PredictionSet, data: EvalDataset) -> float:
    """Root mean squared error of the predicted means."""
    r = _residuals(preds, data)
    return math.sqrt(float(np.mean(np.square(r))))


def mae(preds: PredictionSet, data: EvalDataset) -> float:
    """Mean absolute error of the predicted means."""
    return float(np.mean(np.abs(_residuals(preds, data))))


def sharpness(preds: PredictionSet) -> float:
    """Root mean square of the predicted standard deviations."""
    if len(preds) == 0:
        raise EmptyInputError("at least one point is required")
    return math.sqrt(float(np.mean(np.square(preds.stddevs))))


def nll(preds: PredictionSet, data: EvalDataset) -> float:
    """Mean Gaussian negative log likelihood of the targets."""
    r = _residuals(preds, data)
    z = r / preds.stddevs
    return float(np.mean(_HALF_LOG_2PI + np.log(preds.stddevs) + 0.5 * np.square(z)))


def crps(preds: PredictionSet, data: EvalDataset) -> float:
    """Mean continuous ranked probability score, Gaussian closed form."""
    r = _residuals(preds, data)
    z = r / preds.stddevs
    per_point = preds.stddevs * (
        z * (2.0 * _std_cdf_array(z) - 1.0) + 2.0 * _std_pdf_array(z) - _INV_SQRT_PI
    )
    return float(np.mean(per_point))


def _pinball(u: np.ndarray, p: np.ndarray) -> np.ndarray:
    return np.where(u >= 0.0, p * u, (p - 1.0) * u)


def check_score(preds: PredictionSet, data: EvalDataset, grid: ProbGrid) -> float:
    """Mean check (pinball) score over points and grid levels.

    Restricted to the single level 0.5 this is exactly half the mean absolute
    deviation of the targets from the predicted medians.
    """
    r = _residuals(preds, data)
    z = _std_quantile_array(grid.probs)
    # u[i, j] = y_i - quantile_j(i); the mean-only part of the quantile
    # cancels into the residual.
    u = r[:, None] - preds.stddevs[:, None] * z[None, :]
    return float(np.mean(_pinball(u, grid.probs[None, :])))


def interval_score(preds: PredictionSet, data: EvalDataset, grid: ProbGrid) -> float:
    """Mean interval score over points, reading each grid level as a central
    coverage target."""
    validate(preds, data)
    if len(data) == 0:
        raise EmptyInputError("at least one point is required")
    alpha = 1.0 - grid.probs
    z_lo = _std_quantile_array(alpha / 2.0)
    z_hi = _std_quantile_array(1.0 - alpha / 2.0)
    lo = preds.means[:, None] + preds.stddevs[:, None] * z_lo[None, :]
    hi = preds.means[:, None] + preds.stddevs[:, None] * z_hi[None, :]
    y = data.targets[:, None]
    width = hi - lo
    below = np.where(y < lo, lo - y, 0.0)
    above = np.where(y > hi, y - hi, 0.0)
    per = width + (2.0 / alpha)[None, :] * (below + above)
    return float(np.mean(per))


def metric_report(
    preds: PredictionSet,
    data: EvalDataset,
    grid: ProbGrid,
    adv_cfg: AdvConfig | None = None,
    rng: int | np.random.Generator | None = 0,
) -> MetricReport:
    """Compute every metric at once.

    Parameters
    ----------
    adv_cfg : AdvConfig or None
        When given, the adversarial-group curve is computed with this budget
        and attached; ``rng`` seeds its subset draws.
    """
    validate(preds, data)
    if len(data) == 0:
        raise EmptyInputError("at least one point is required")
    curve = calibration_curve(preds, data, grid)
    adv = None
    if adv_cfg is not None:
        adv = adversarial_group_calibration(
            preds,
            data,
            grid,
            n_sizes=adv_cfg.n_sizes,
            n_draws=adv_cfg.n_draws,
            rng=rng,
        )
    return MetricReport(
        rmse=rmse(preds, data),
        mae=mae(preds, data),
        ece=float(np.mean(np.abs(curve.observed - curve.expected))),
        sharpness=sharpness(preds),
        nll=nll(preds, data),
        crps=crps(preds, data),
        check=check_score(preds, data, grid),
        interval=interval_score(preds, data, grid),
        calibration_curve=curve,
        adv_group_curve=adv,
    )
