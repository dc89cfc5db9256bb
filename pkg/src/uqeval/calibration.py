"""Average and adversarial-group calibration.

A set of Gaussian predictions is averagely calibrated when, for each level
``p``, the fraction of targets falling at or below the predicted ``p``-th
quantile is ``p``.  The expected calibration error averages the absolute
deviation between that observed proportion and the level over a grid.

Average calibration is necessary but weak: a model can be calibrated on the
full set while badly miscalibrated on subsets.  The adversarial-group curve
probes this by drawing many random index subsets at each of several subset
sizes and recording the worst (largest) subset ECE; a genuinely calibrated
model keeps even the worst random group near zero once groups are large
enough for the binomial noise to die down.

Ties count as covered: a target exactly on the predicted quantile is inside.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import (
    ConfigurationError,
    EmptyInputError,
    EvalDataset,
    PredictionSet,
    ProbGrid,
    ValidationError,
    _std_quantile,
    _std_quantile_array,
    validate,
)

__all__ = [
    "CalibrationCurve",
    "GroupSpec",
    "AdvGroupCurve",
    "AdvConfig",
    "observed_proportion",
    "calibration_curve",
    "ece",
    "group_ece",
    "adversarial_group_calibration",
]


@dataclass(frozen=True)
class CalibrationCurve:
    """Observed coverage proportion at each expected level."""

    expected: np.ndarray
    observed: np.ndarray

    def __post_init__(self) -> None:
        expected = np.asarray(self.expected, dtype=float)
        observed = np.asarray(self.observed, dtype=float)
        if expected.shape != observed.shape or expected.ndim != 1:
            raise ValidationError(
                f"expected and observed must be equal-length vectors, "
                f"got shapes {expected.shape} and {observed.shape}"
            )
        if ((observed < 0.0) | (observed > 1.0)).any():
            raise ValidationError("observed proportions must lie in [0, 1]")
        expected.setflags(write=False)
        observed.setflags(write=False)
        object.__setattr__(self, "expected", expected)
        object.__setattr__(self, "observed", observed)

    def __len__(self) -> int:
        return self.expected.shape[0]


@dataclass(frozen=True)
class GroupSpec:
    """Index groups for group-wise calibration; each group is non-empty."""

    groups: tuple[np.ndarray, ...]

    def __post_init__(self) -> None:
        cleaned = []
        for k, g in enumerate(self.groups):
            idx = np.asarray(g, dtype=np.intp)
            if idx.ndim != 1 or idx.shape[0] == 0:
                raise ValidationError(f"group {k} must be a non-empty index vector")
            if (idx < 0).any():
                raise ValidationError(f"group {k} holds a negative index")
            idx.setflags(write=False)
            cleaned.append(idx)
        if not cleaned:
            raise EmptyInputError("at least one group is required")
        object.__setattr__(self, "groups", tuple(cleaned))

    def __len__(self) -> int:
        return len(self.groups)


@dataclass(frozen=True)
class AdvGroupCurve:
    """Worst-group calibration versus group-size fraction.

    ``mean_worst_ece[k]`` and ``stderr[k]`` summarize, over independent
    replicates, the largest subset ECE seen among random groups whose size is
    ``group_fractions[k]`` of the dataset.
    """

    group_fractions: np.ndarray
    mean_worst_ece: np.ndarray
    stderr: np.ndarray

    def __post_init__(self) -> None:
        fr = np.asarray(self.group_fractions, dtype=float)
        mean = np.asarray(self.mean_worst_ece, dtype=float)
        err = np.asarray(self.stderr, dtype=float)
        if not (fr.shape == mean.shape == err.shape) or fr.ndim != 1:
            raise ValidationError("curve arrays must be equal-length vectors")
        if not (np.diff(fr) > 0.0).all():
            raise ValidationError("group fractions must be strictly increasing")
        if fr.shape[0] and fr[-1] != 1.0:
            raise ValidationError("last group fraction must equal 1.0")
        for a in (fr, mean, err):
            a.setflags(write=False)
        object.__setattr__(self, "group_fractions", fr)
        object.__setattr__(self, "mean_worst_ece", mean)
        object.__setattr__(self, "stderr", err)

    def __len__(self) -> int:
        return self.group_fractions.shape[0]


@dataclass(frozen=True)
class AdvConfig:
    """Adversarial-group search budget."""

    n_sizes: int = 10
    n_draws: int = 20

    def __post_init__(self) -> None:
        if self.n_sizes < 1:
            raise ConfigurationError(f"n_sizes must be >= 1, got {self.n_sizes}")
        if self.n_draws < 1:
            raise ConfigurationError(f"n_draws must be >= 1, got {self.n_draws}")


def _require_points(data: EvalDataset) -> None:
    if len(data) == 0:
        raise EmptyInputError("at least one point is required")


def _coverage_matrix(
    preds: PredictionSet, data: EvalDataset, grid: ProbGrid
) -> np.ndarray:
    """(n, m) indicator of target i lying at or below the level-j quantile."""
    z = _std_quantile_array(grid.probs)
    q = preds.means[:, None] + preds.stddevs[:, None] * z[None, :]
    return data.targets[:, None] <= q


def observed_proportion(preds: PredictionSet, data: EvalDataset, p: float) -> float:
    """Fraction of targets at or below their predicted p-th quantile.

    Parameters
    ----------
    preds, data : PredictionSet, EvalDataset
        Validated pair; must be non-empty.
    p : float
        Level, strictly inside (0, 1).
    """
    validate(preds, data)
    _require_points(data)
    p = float(p)
    if not (math.isfinite(p) and 0.0 < p < 1.0):
        raise ValidationError(f"level must lie strictly inside (0, 1), got {p}")
    q = preds.means + preds.stddevs * _std_quantile(p)
    return float(np.count_nonzero(data.targets <= q)) / len(data)


def calibration_curve(
    preds: PredictionSet, data: EvalDataset, grid: ProbGrid
) -> CalibrationCurve:
    """Observed proportion at every grid level.

    The observed proportions are nondecreasing in the level because the
    predicted quantiles are.
    """
    validate(preds, data)
    _require_points(data)
    observed = _coverage_matrix(preds, data, grid).mean(axis=0)
    return CalibrationCurve(grid.probs, observed)


def ece(preds: PredictionSet, data: EvalDataset, grid: ProbGrid) -> float:
    """Expected calibration error: mean |observed - expected| over the grid."""
    curve = calibration_curve(preds, data, grid)
    return float(np.mean(np.abs(curve.observed - curve.expected)))


def group_ece(
    preds: PredictionSet, data: EvalDataset, grid: ProbGrid, groups: GroupSpec
) -> np.ndarray:
    """ECE of each index group, in group order."""
    validate(preds, data)
    _require_points(data)
    n = len(data)
    for k, idx in enumerate(groups.groups):
        if idx.max() >= n:
            raise ValidationError(
                f"group {k} holds index {int(idx.max())}, dataset has {n} points"
            )
    cov = _coverage_matrix(preds, data, grid)
    out = np.empty(len(groups))
    for k, idx in enumerate(groups.groups):
        out[k] = np.mean(np.abs(cov[idx].mean(axis=0) - grid.probs))
    return out


def adversarial_group_calibration(
    preds: PredictionSet,
    data: EvalDataset,
    grid: ProbGrid,
    n_sizes: int = 10,
    n_draws: int = 20,
    rng: int | np.random.Generator | None = 0,
) -> AdvGroupCurve:
    """Worst random-group ECE at equi-spaced group-size fractions.

    For each of ``n_sizes`` fractions from 0.01 to 1.0, a replicate draws
    ``n_draws`` uniform index subsets without replacement (subset size is the
    fraction of the dataset rounded to the nearest integer, floored at one)
    and keeps the largest subset ECE.  The whole maximum-taking procedure is
    repeated ``n_draws`` times; the curve reports the mean of the replicate
    maxima and their standard error.  At fraction 1.0 every subset is the
    full dataset, so the mean equals the full-set ECE and the stderr is zero.

    Results are bitwise reproducible for a given seed: draws come from a
    single generator consumed in a fixed (size, replicate, draw) order.

    Parameters
    ----------
    n_sizes, n_draws : int
        Budget; both must be >= 1.
    rng : int, numpy Generator, or None
        Seed or generator for the subset draws.
    """
    validate(preds, data)
    _require_points(data)
    cfg = AdvConfig(n_sizes=n_sizes, n_draws=n_draws)
    gen = np.random.default_rng(rng)
    n = len(data)
    probs = grid.probs
    cov = _coverage_matrix(preds, data, grid).astype(float)

    if cfg.n_sizes == 1:
        fractions = np.array([1.0])
    else:
        fractions = np.linspace(0.01, 1.0, cfg.n_sizes)
    mean_worst = np.empty(cfg.n_sizes)
    stderr = np.empty(cfg.n_sizes)
    for k, frac in enumerate(fractions):
        size = max(1, int(round(frac * n)))
        if size > n:
            size = n
        maxima = np.empty(cfg.n_draws)
        for rep in range(cfg.n_draws):
            worst = -np.inf
            for _ in range(cfg.n_draws):
                idx = gen.choice(n, size=size, replace=False)
                sub_ece = float(np.mean(np.abs(cov[idx].mean(axis=0) - probs)))
                if sub_ece > worst:
                    worst = sub_ece
            maxima[rep] = worst
        if cfg.n_draws == 1 or np.all(maxima == maxima[0]):
            # Degenerate replicate sample (always the case at fraction 1.0,
            # where every subset is the full dataset): no dispersion, and
            # averaging identical doubles must not pick up roundoff.
            mean_worst[k] = maxima[0]
            stderr[k] = 0.0
        else:
            mean_worst[k] = maxima.mean()
            stderr[k] = maxima.std(ddof=1) / math.sqrt(cfg.n_draws)
    return AdvGroupCurve(fractions, mean_worst, stderr)
