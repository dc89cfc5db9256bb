"""Core types and Gaussian primitive contracts."""

from __future__ import annotations

import math

import numpy as np
import pytest
from scipy.special import ndtr, ndtri

from uqeval.core import (
    ConfigurationError,
    EmptyInputError,
    EvalDataset,
    PredictionSet,
    ProbGrid,
    ShapeError,
    ValidationError,
    default_grid,
    gaussian_cdf,
    gaussian_quantile,
    validate,
)


def make_preds(n: int, seed: int = 0) -> PredictionSet:
    rng = np.random.default_rng(seed)
    return PredictionSet(rng.normal(size=n), rng.uniform(0.5, 2.0, size=n))


def make_data(n: int, seed: int = 1) -> EvalDataset:
    rng = np.random.default_rng(seed)
    return EvalDataset(rng.normal(size=(n, 1)), rng.normal(size=n))


class TestGaussianCdf:
    def test_median_is_exact(self) -> None:
        assert gaussian_cdf(0.0, 1.0, 0.0) == 0.5
        assert gaussian_cdf(3.0, 2.5, 3.0) == 0.5

    def test_known_point(self) -> None:
        # z = 1.959964 is the 97.5% point of the standard normal to 6 decimals.
        assert gaussian_cdf(0.0, 1.0, 1.959964) == pytest.approx(0.975, abs=1e-6)

    def test_against_independent_oracle(self) -> None:
        zs = np.linspace(-8.0, 8.0, 1601)
        ours = np.array([gaussian_cdf(0.0, 1.0, z) for z in zs])
        assert np.max(np.abs(ours - ndtr(zs))) < 1e-13

    def test_location_scale(self) -> None:
        for mu, sigma, y in [(2.0, 3.0, 1.0), (-4.0, 0.25, -4.1), (0.0, 10.0, 7.0)]:
            assert gaussian_cdf(mu, sigma, y) == pytest.approx(
                ndtr((y - mu) / sigma), abs=1e-13
            )

    def test_symmetry(self) -> None:
        for z in np.linspace(0.0, 6.0, 61):
            assert gaussian_cdf(0.0, 1.0, z) + gaussian_cdf(0.0, 1.0, -z) == pytest.approx(
                1.0, abs=1e-12
            )

    def test_monotone_in_y(self) -> None:
        ys = np.linspace(-6.0, 6.0, 241)
        vals = [gaussian_cdf(0.5, 1.5, y) for y in ys]
        assert all(a < b for a, b in zip(vals, vals[1:]))

    def test_left_tail_keeps_relative_precision(self) -> None:
        got = gaussian_cdf(0.0, 1.0, -9.0)
        want = float(ndtr(-9.0))
        assert got == pytest.approx(want, rel=1e-12)

    def test_rejects_bad_params(self) -> None:
        with pytest.raises(ValidationError):
            gaussian_cdf(0.0, 0.0, 1.0)
        with pytest.raises(ValidationError):
            gaussian_cdf(0.0, -1.0, 1.0)
        with pytest.raises(ValidationError):
            gaussian_cdf(math.nan, 1.0, 1.0)
        with pytest.raises(ValidationError):
            gaussian_cdf(0.0, 1.0, math.inf)


class TestGaussianQuantile:
    def test_median_is_exact(self) -> None:
        assert gaussian_quantile(0.0, 1.0, 0.5) == 0.0
        assert gaussian_quantile(2.0, 3.0, 0.5) == 2.0

    def test_known_point(self) -> None:
        assert gaussian_quantile(0.0, 1.0, 0.975) == pytest.approx(1.959964, abs=1e-6)

    def test_round_trip_dense_grid(self) -> None:
        ps = np.concatenate(
            [
                np.linspace(1e-6, 1.0 - 1e-6, 2001),
                [1e-12, 1e-9, 0.5, 1.0 - 1e-9, 1.0 - 1e-12],
            ]
        )
        for p in ps:
            q = gaussian_quantile(1.5, 0.7, p)
            assert gaussian_cdf(1.5, 0.7, q) == pytest.approx(float(p), abs=1e-9)

    def test_symmetry(self) -> None:
        mu, sigma = -2.0, 1.3
        for p in np.linspace(0.001, 0.999, 499):
            lo = gaussian_quantile(mu, sigma, p)
            hi = gaussian_quantile(mu, sigma, 1.0 - p)
            assert lo + hi == pytest.approx(2.0 * mu, abs=1e-9)

    def test_against_independent_oracle(self) -> None:
        ps = np.linspace(0.0005, 0.9995, 999)
        ours = np.array([gaussian_quantile(0.0, 1.0, p) for p in ps])
        assert np.max(np.abs(ours - ndtri(ps))) < 1e-10

    def test_monotone_in_p(self) -> None:
        ps = np.linspace(0.01, 0.99, 99)
        qs = [gaussian_quantile(0.0, 2.0, p) for p in ps]
        assert all(a < b for a, b in zip(qs, qs[1:]))

    def test_rejects_bad_levels(self) -> None:
        for p in (0.0, 1.0, -0.1, 1.1, math.nan):
            with pytest.raises(ValidationError):
                gaussian_quantile(0.0, 1.0, p)
        with pytest.raises(ValidationError):
            gaussian_quantile(0.0, -2.0, 0.5)


class TestPredictionSet:
    def test_valid_construction(self) -> None:
        preds = PredictionSet([0.0, 1.0], [1.0, 2.0])
        assert len(preds) == 2
        assert preds.means.dtype == np.float64

    def test_arrays_are_frozen(self) -> None:
        preds = make_preds(4)
        with pytest.raises(ValueError):
            preds.means[0] = 99.0

    def test_rejects_nonpositive_stddev_and_names_index(self) -> None:
        with pytest.raises(ValidationError, match="index 1"):
            PredictionSet([0.0, 1.0, 2.0], [1.0, 0.0, 1.0])
        with pytest.raises(ValidationError, match="index 2"):
            PredictionSet([0.0, 1.0, 2.0], [1.0, 1.0, -3.0])

    def test_rejects_non_finite(self) -> None:
        with pytest.raises(ValidationError, match="index 0"):
            PredictionSet([math.nan], [1.0])
        with pytest.raises(ValidationError):
            PredictionSet([0.0], [math.inf])

    def test_rejects_length_mismatch(self) -> None:
        with pytest.raises(ShapeError):
            PredictionSet([0.0, 1.0], [1.0])

    def test_take(self) -> None:
        preds = make_preds(6)
        sub = preds.take([4, 1])
        assert sub.means[0] == preds.means[4]
        assert sub.stddevs[1] == preds.stddevs[1]


class TestEvalDataset:
    def test_valid_construction_and_reshape(self) -> None:
        data = EvalDataset([1.0, 2.0], [0.5, 0.6], split="train")
        assert data.inputs.shape == (2, 1)
        assert len(data) == 2

    def test_zero_width_inputs_allowed(self) -> None:
        data = EvalDataset(np.empty((3, 0)), [1.0, 2.0, 3.0])
        assert data.inputs.shape == (3, 0)

    def test_rejects_length_mismatch(self) -> None:
        with pytest.raises(ShapeError):
            EvalDataset(np.zeros((2, 1)), [1.0, 2.0, 3.0])

    def test_rejects_bad_split(self) -> None:
        with pytest.raises(ValidationError):
            EvalDataset([1.0], [1.0], split="holdout")

    def test_rejects_non_finite_target(self) -> None:
        with pytest.raises(ValidationError, match="index 1"):
            EvalDataset([1.0, 2.0], [0.0, math.nan])


class TestProbGrid:
    def test_default_grid(self) -> None:
        grid = default_grid()
        assert len(grid) == 99
        assert grid.probs[0] == 0.01
        assert grid.probs[-1] == 0.99
        assert np.all(np.diff(grid.probs) > 0)

    def test_uniform_matches_integer_division(self) -> None:
        grid = ProbGrid.uniform(0.01)
        assert np.array_equal(grid.probs, np.arange(1, 100) / 100)

    def test_uniform_coarse(self) -> None:
        assert np.array_equal(ProbGrid.uniform(0.25).probs, [0.25, 0.5, 0.75])
        assert len(ProbGrid.uniform(0.1)) == 9

    def test_uniform_rejects_bad_step(self) -> None:
        for step in (0.0, 1.0, -0.5, 0.03, 0.6):
            with pytest.raises(ConfigurationError):
                ProbGrid.uniform(step)

    def test_rejects_levels_outside_open_interval(self) -> None:
        with pytest.raises(ValidationError):
            ProbGrid([0.0, 0.5])
        with pytest.raises(ValidationError):
            ProbGrid([0.5, 1.0])

    def test_rejects_non_increasing(self) -> None:
        with pytest.raises(ValidationError):
            ProbGrid([0.5, 0.5])
        with pytest.raises(ValidationError):
            ProbGrid([0.6, 0.4])

    def test_rejects_empty(self) -> None:
        with pytest.raises(EmptyInputError):
            ProbGrid([])


class TestValidate:
    def test_accepts_matching_pair(self) -> None:
        validate(make_preds(5), make_data(5))

    def test_rejects_count_mismatch(self) -> None:
        with pytest.raises(ShapeError, match="2 vs 3"):
            validate(make_preds(2), make_data(3))

    def test_rejects_wrong_types(self) -> None:
        with pytest.raises(ValidationError):
            validate([0.0], make_data(1))  # type: ignore[arg-type]
        with pytest.raises(ValidationError):
            validate(make_preds(1), [0.0])  # type: ignore[arg-type]
