"""Average and adversarial-group calibration contracts."""

from __future__ import annotations

import numpy as np
import pytest

from uqeval.calibration import (
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
from uqeval.core import (
    ConfigurationError,
    EmptyInputError,
    EvalDataset,
    PredictionSet,
    ProbGrid,
    ValidationError,
    default_grid,
    gaussian_quantile,
)


def quantile_matching_preds(targets: np.ndarray, grid: ProbGrid) -> PredictionSet:
    """Gaussians whose coverage pattern on the grid is I{p >= target}.

    Each target t in (0, 1) gets mean t - z(p*) + 1e-9 with p* the smallest
    grid level >= t, so the predicted p-th quantile clears the target exactly
    for grid levels at or above t and falls short below it.  The 1e-9 nudge
    keeps the boundary comparison away from float roundoff.
    """
    probs = grid.probs
    means = []
    for t in targets:
        j = int(np.searchsorted(probs, t, side="left"))
        z = gaussian_quantile(0.0, 1.0, float(probs[j]))
        means.append(t - z + 1e-9)
    return PredictionSet(np.array(means), np.ones(len(targets)))


def calibrated_pair(n: int, seed: int) -> tuple[PredictionSet, EvalDataset]:
    """Targets drawn exactly from the predicted Gaussians."""
    rng = np.random.default_rng(seed)
    mu = rng.normal(size=n)
    sigma = rng.uniform(0.5, 2.0, size=n)
    y = mu + sigma * rng.standard_normal(n)
    return PredictionSet(mu, sigma), EvalDataset(np.zeros((n, 1)), y)


class TestObservedProportion:
    def test_tie_counts_as_covered(self) -> None:
        # A target sitting exactly on its predicted median is inside.
        preds = PredictionSet([1.5], [2.0])
        data = EvalDataset([[0.0]], [1.5])
        assert observed_proportion(preds, data, 0.5) == 1.0
        assert observed_proportion(preds, data, 0.49) == 0.0
        assert observed_proportion(preds, data, 0.51) == 1.0

    def test_counts_fraction(self) -> None:
        preds = PredictionSet([0.0, 0.0, 0.0, 0.0], [1.0, 1.0, 1.0, 1.0])
        data = EvalDataset(np.zeros((4, 1)), [-10.0, -10.0, 10.0, 10.0])
        assert observed_proportion(preds, data, 0.5) == 0.5

    def test_rejects_bad_level_and_empty(self) -> None:
        preds = PredictionSet([0.0], [1.0])
        data = EvalDataset([[0.0]], [0.0])
        for p in (0.0, 1.0, -1.0):
            with pytest.raises(ValidationError):
                observed_proportion(preds, data, p)
        empty = PredictionSet([], [])
        with pytest.raises(EmptyInputError):
            observed_proportion(empty, EvalDataset(np.empty((0, 1)), []), 0.5)


class TestCalibrationCurve:
    def test_single_median_target_step(self) -> None:
        preds = PredictionSet([2.0], [1.0])
        data = EvalDataset([[0.0]], [2.0])
        curve = calibration_curve(preds, data, default_grid())
        expected = np.where(curve.expected >= 0.5, 1.0, 0.0)
        assert np.array_equal(curve.observed, expected)

    def test_three_target_jump_pattern(self) -> None:
        grid = default_grid()
        targets = np.array([0.1, 0.5, 0.9])
        preds = quantile_matching_preds(targets, grid)
        data = EvalDataset(np.zeros((3, 1)), targets)
        curve = calibration_curve(preds, data, grid)
        want = (
            (grid.probs[None, :] >= targets[:, None]).mean(axis=0)
        )
        assert np.array_equal(curve.observed, want)

    def test_observed_nondecreasing(self) -> None:
        preds, data = calibrated_pair(500, seed=3)
        curve = calibration_curve(preds, data, default_grid())
        assert (np.diff(curve.observed) >= 0).all()

    def test_rejects_mismatched_vectors(self) -> None:
        with pytest.raises(ValidationError):
            CalibrationCurve([0.1, 0.2], [0.5])
        with pytest.raises(ValidationError):
            CalibrationCurve([0.1], [1.5])


class TestEce:
    def test_always_covered_is_half(self) -> None:
        n = 7
        preds = PredictionSet(np.full(n, 100.0), np.full(n, 1e-3))
        data = EvalDataset(np.zeros((n, 1)), np.zeros(n))
        assert ece(preds, data, default_grid()) == pytest.approx(0.5, abs=1e-12)

    def test_never_covered_is_half(self) -> None:
        preds = PredictionSet([-100.0], [1e-3])
        data = EvalDataset([[0.0]], [0.0])
        assert ece(preds, data, default_grid()) == pytest.approx(0.5, abs=1e-12)

    def test_hand_enumerated_three_targets(self) -> None:
        # Independent enumeration: coverage of target t at level p is
        # I{p >= t}, so the observed proportions take values k/3 and the
        # error sum runs over the 99 levels directly.
        grid = default_grid()
        targets = np.array([0.1, 0.5, 0.9])
        obs = (grid.probs[None, :] >= targets[:, None]).mean(axis=0)
        want = float(np.mean(np.abs(obs - grid.probs)))

        preds = quantile_matching_preds(targets, grid)
        data = EvalDataset(np.zeros((3, 1)), targets)
        got = ece(preds, data, grid)
        assert got == pytest.approx(want, abs=1e-15)
        assert round(got, 5) == 0.09320

    def test_calibrated_model_is_small(self) -> None:
        preds, data = calibrated_pair(20000, seed=11)
        assert ece(preds, data, default_grid()) < 0.01


class TestGroupEce:
    def test_singleton_groups_match_hand_computation(self) -> None:
        grid = ProbGrid.uniform(0.25)
        preds = PredictionSet([0.0, 5.0], [1.0, 1.0])
        data = EvalDataset(np.zeros((2, 1)), [100.0, -100.0])
        got = group_ece(preds, data, grid, GroupSpec((np.array([0]), np.array([1]))))
        # Point 0 is never covered, point 1 always: per-level errors are p
        # and 1 - p respectively.
        probs = grid.probs
        assert got[0] == pytest.approx(np.mean(probs), abs=1e-15)
        assert got[1] == pytest.approx(np.mean(1.0 - probs), abs=1e-15)

    def test_full_group_matches_ece(self) -> None:
        preds, data = calibrated_pair(50, seed=5)
        grid = default_grid()
        got = group_ece(preds, data, grid, GroupSpec((np.arange(50),)))
        assert got[0] == ece(preds, data, grid)

    def test_rejects_out_of_range_and_empty_groups(self) -> None:
        preds, data = calibrated_pair(4, seed=0)
        with pytest.raises(ValidationError, match="group 0"):
            group_ece(preds, data, default_grid(), GroupSpec((np.array([4]),)))
        with pytest.raises(ValidationError):
            GroupSpec((np.array([], dtype=int),))
        with pytest.raises(EmptyInputError):
            GroupSpec(())


class TestAdversarialGroupCalibration:
    def test_full_fraction_equals_full_ece_exactly(self) -> None:
        preds, data = calibrated_pair(300, seed=7)
        grid = default_grid()
        curve = adversarial_group_calibration(preds, data, grid, rng=42)
        assert curve.group_fractions[-1] == 1.0
        assert curve.mean_worst_ece[-1] == ece(preds, data, grid)
        assert curve.stderr[-1] == 0.0

    def test_bitwise_reproducible(self) -> None:
        preds, data = calibrated_pair(200, seed=9)
        grid = default_grid()
        a = adversarial_group_calibration(preds, data, grid, rng=123)
        b = adversarial_group_calibration(preds, data, grid, rng=123)
        assert np.array_equal(a.mean_worst_ece, b.mean_worst_ece)
        assert np.array_equal(a.stderr, b.stderr)
        c = adversarial_group_calibration(preds, data, grid, rng=124)
        assert not np.array_equal(a.mean_worst_ece, c.mean_worst_ece)

    def test_single_draw_is_one_subset(self) -> None:
        preds, data = calibrated_pair(50, seed=2)
        grid = ProbGrid.uniform(0.1)
        curve = adversarial_group_calibration(
            preds, data, grid, n_sizes=3, n_draws=1, rng=5
        )
        assert len(curve) == 3
        assert (curve.stderr == 0.0).all()
        # Reproduce the single subset by hand with the same stream.
        gen = np.random.default_rng(5)
        frac = curve.group_fractions[0]
        size = max(1, int(round(frac * 50)))
        idx = gen.choice(50, size=size, replace=False)
        sub_p = preds.take(idx)
        sub_d = data.take(idx)
        assert curve.mean_worst_ece[0] == ece(sub_p, sub_d, grid)

    def test_fractions_shape_and_monotonicity(self) -> None:
        preds, data = calibrated_pair(40, seed=1)
        curve = adversarial_group_calibration(
            preds, data, ProbGrid.uniform(0.5), n_sizes=10, n_draws=2, rng=0
        )
        assert len(curve) == 10
        assert curve.group_fractions[0] == pytest.approx(0.01)
        assert (np.diff(curve.group_fractions) > 0).all()

    def test_matches_independent_monte_carlo_oracle(self) -> None:
        # Oracle: a from-scratch draw loop with its own generator estimates
        # the mean worst-group ECE at one fraction; the library value must
        # land within 3 combined standard errors.
        preds, data = calibrated_pair(4000, seed=21)
        grid = default_grid()
        n_draws = 20
        curve = adversarial_group_calibration(
            preds, data, grid, n_sizes=10, n_draws=n_draws, rng=31
        )
        frac = curve.group_fractions[1]
        size = int(round(frac * 4000))

        z = np.array([gaussian_quantile(0.0, 1.0, p) for p in grid.probs])
        cov = (
            data.targets[:, None]
            <= preds.means[:, None] + preds.stddevs[:, None] * z[None, :]
        ).astype(float)
        oracle_rng = np.random.default_rng(9000)
        reps = 60
        maxima = np.empty(reps)
        for r in range(reps):
            worst = -np.inf
            for _ in range(n_draws):
                idx = oracle_rng.choice(4000, size=size, replace=False)
                val = float(np.mean(np.abs(cov[idx].mean(axis=0) - grid.probs)))
                worst = max(worst, val)
            maxima[r] = worst
        oracle_mean = maxima.mean()
        oracle_err = maxima.std(ddof=1) / np.sqrt(reps)
        tol = 3.0 * float(np.hypot(oracle_err, curve.stderr[1]))
        assert abs(curve.mean_worst_ece[1] - oracle_mean) <= tol

    def test_rejects_bad_budget(self) -> None:
        preds, data = calibrated_pair(10, seed=0)
        with pytest.raises(ConfigurationError):
            adversarial_group_calibration(preds, data, default_grid(), n_sizes=0)
        with pytest.raises(ConfigurationError):
            adversarial_group_calibration(preds, data, default_grid(), n_draws=0)
        with pytest.raises(ConfigurationError):
            AdvConfig(n_draws=-1)

    def test_curve_type_invariants(self) -> None:
        with pytest.raises(ValidationError):
            AdvGroupCurve([0.5, 0.2], [0.1, 0.1], [0.0, 0.0])
        with pytest.raises(ValidationError):
            AdvGroupCurve([0.5, 0.9], [0.1, 0.1], [0.0, 0.0])
