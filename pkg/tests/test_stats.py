"""Tests for the empirical-statistics utilities."""

import math

import numpy as np
import pytest

from lqfsim.errors import ConfigurationError, NumericalDomainError
from lqfsim.stats import (EmpiricalSample, histogram, ks_distance, mean_ci,
                          normal_cdf)


class TestKsDistance:
    def test_single_point_against_uniform(self):
        assert ks_distance([0.5], lambda x: np.clip(x, 0, 1)) == pytest.approx(0.5)

    def test_perfectly_placed_quantiles(self):
        r = 10
        sample = (np.arange(1, r + 1) - 0.5) / r
        d = ks_distance(sample, lambda x: np.clip(x, 0, 1))
        assert d == pytest.approx(0.5 / r, abs=1e-15)

    def test_large_normal_sample_below_critical_value(self):
        # 99% two-sided critical value is ~1.63 / sqrt(R)
        rng = np.random.default_rng(2024)
        sample = rng.standard_normal(100000)
        d = ks_distance(sample, lambda x: normal_cdf(x, 0.0, 1.0))
        assert d < 1.63 / math.sqrt(sample.size)

    def test_invariant_under_increasing_transform(self):
        rng = np.random.default_rng(5)
        sample = rng.standard_normal(500)
        base = ks_distance(sample, lambda x: normal_cdf(x, 0.0, 1.0))
        transformed = ks_distance(
            np.exp(sample), lambda y: normal_cdf(np.log(y), 0.0, 1.0))
        assert transformed == pytest.approx(base, abs=1e-12)

    def test_empty_sample_rejected(self):
        with pytest.raises(NumericalDomainError):
            ks_distance([], lambda x: x)

    def test_accepts_empirical_sample(self):
        sample = EmpiricalSample(np.array([0.1, 0.9]), n=2, d=1, lam=0.5, t=1.0)
        assert 0.0 <= ks_distance(sample, lambda x: np.clip(x, 0, 1)) <= 1.0


class TestNormalCdf:
    def test_center(self):
        assert normal_cdf(3.0, 3.0, 2.0) == pytest.approx(0.5, abs=1e-15)

    def test_one_sigma(self):
        assert normal_cdf(1.0, 0.0, 1.0) == pytest.approx(
            0.8413447460685429, abs=1e-12)

    def test_far_left_tail(self):
        assert normal_cdf(-40.0, 0.0, 1.0) == 0.0

    def test_monotone_and_clamped(self):
        grid = np.linspace(-10, 10, 501)
        values = normal_cdf(grid, 0.0, 1.0)
        assert np.all(np.diff(values) >= 0)
        assert values.min() >= 0.0 and values.max() <= 1.0

    def test_sigma_validation(self):
        with pytest.raises(NumericalDomainError):
            normal_cdf(0.0, 0.0, 0.0)


class TestHistogram:
    def test_point_mass(self):
        hist = histogram(np.full(50, 0.05), 0.1)
        assert hist.lefts.tolist() == [0.0]
        assert hist.densities[0] == pytest.approx(10.0)

    def test_uniform_grid(self):
        sample = np.arange(100) / 100.0
        hist = histogram(sample, 0.25)
        assert len(hist.densities) == 4
        np.testing.assert_allclose(hist.densities, 1.0)

    def test_area_is_one(self):
        rng = np.random.default_rng(8)
        hist = histogram(rng.exponential(size=1000), 0.37)
        assert hist.area() == pytest.approx(1.0, abs=1e-12)

    def test_edges_aligned_to_width(self):
        hist = histogram([0.31, 0.49, 0.71], 0.1)
        np.testing.assert_allclose(hist.lefts / 0.1,
                                   np.round(hist.lefts / 0.1), atol=1e-9)

    def test_bad_width(self):
        with pytest.raises(ConfigurationError):
            histogram([1.0], 0.0)


class TestMeanCi:
    def test_constant_sample(self):
        mean, halfwidth = mean_ci(np.full(10, 3.25))
        assert mean == 3.25 and halfwidth == 0.0

    def test_two_point_sample(self):
        mean, halfwidth = mean_ci(np.array([0.0, 1.0]), confidence=0.95)
        assert mean == 0.5
        assert halfwidth == pytest.approx(0.98, abs=5e-4)

    def test_halfwidth_shrinks_like_sqrt_r(self):
        rng = np.random.default_rng(3)
        values = rng.standard_normal(400)
        _, narrow = mean_ci(np.tile(values, 4))
        _, wide = mean_ci(values)
        assert narrow == pytest.approx(wide / 2.0, rel=0.02)

    def test_too_small(self):
        with pytest.raises(NumericalDomainError):
            mean_ci([1.0])

    def test_confidence_validation(self):
        with pytest.raises(ConfigurationError):
            mean_ci([0.0, 1.0], confidence=1.0)


class TestHistogramCsv:
    def test_format(self, tmp_path):
        hist = histogram([0.1, 0.2, 0.3], 0.25)
        target = tmp_path / "hist.csv"
        hist.to_csv(target, comment="meta")
        lines = target.read_text().splitlines()
        assert lines[0] == "# meta"
        assert lines[1] == "bin_left,bin_right,density"
