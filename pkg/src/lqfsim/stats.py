"""Empirical-statistics utilities used to validate the approximations.

The Kolmogorov-Smirnov distance uses the exact two-sided empirical formula
(not the asymptotic distribution), so it stays valid for small sample sizes.
Histograms are density-normalized with bin edges aligned to multiples of the
bin width, which keeps bins comparable across samples on the 1/n lattice of
tail fractions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from statistics import NormalDist
from typing import Callable, Optional

import numpy as np
from scipy import special

from lqfsim.engine import _write_rows
from lqfsim.errors import ConfigurationError, NumericalDomainError


@dataclass(frozen=True)
class EmpiricalSample:
    """Replicated observations of one scalar statistic plus its provenance."""

    values: np.ndarray
    n: int = 0
    d: int = 0
    lam: float = float("nan")
    t: float = float("nan")

    def __post_init__(self):
        object.__setattr__(self, "values",
                           np.asarray(self.values, dtype=np.float64))
        if self.values.ndim != 1 or self.values.size < 1:
            raise ConfigurationError("sample must be a nonempty vector")

    @property
    def replications(self) -> int:
        return int(self.values.size)


def _as_values(sample) -> np.ndarray:
    if isinstance(sample, EmpiricalSample):
        return sample.values
    values = np.asarray(sample, dtype=np.float64)
    if values.ndim != 1 or values.size < 1:
        raise NumericalDomainError("sample must be a nonempty vector")
    return values


def ks_distance(sample, cdf: Callable) -> float:
    """Exact two-sided Kolmogorov-Smirnov distance to a model cdf.

    D = max_i max(i/R - cdf(x_(i)), cdf(x_(i)) - (i-1)/R) over the sorted
    sample x_(1) <= ... <= x_(R).
    """
    values = np.sort(_as_values(sample))
    r = values.size
    model = np.asarray(cdf(values), dtype=np.float64)
    upper = np.arange(1, r + 1) / r - model
    lower = model - np.arange(0, r) / r
    return float(max(upper.max(), lower.max()))


def normal_cdf(x, mu: float, sigma: float):
    """Gaussian cdf via erfc, clamped to [0, 1]; absolute error below 1e-12."""
    if sigma <= 0:
        raise NumericalDomainError(f"sigma must be > 0, got {sigma}")
    x = np.asarray(x, dtype=np.float64)
    z = (x - mu) / (sigma * math.sqrt(2.0))
    out = np.clip(0.5 * special.erfc(-z), 0.0, 1.0)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class Histogram:
    """Density-normalized histogram; bin k covers [lefts[k], rights[k])."""

    lefts: np.ndarray
    rights: np.ndarray
    densities: np.ndarray

    def area(self) -> float:
        return float(np.sum(self.densities * (self.rights - self.lefts)))

    def to_csv(self, target, comment: Optional[str] = None) -> None:
        _write_rows(target, comment, "bin_left,bin_right,density",
                    zip(self.lefts, self.rights, self.densities))


def histogram(sample, bin_width: float) -> Histogram:
    """Histogram with edges at integer multiples of ``bin_width`` and bin
    areas summing to one."""
    if bin_width <= 0:
        raise ConfigurationError(f"bin_width must be > 0, got {bin_width}")
    values = _as_values(sample)
    idx = np.floor(values / bin_width).astype(np.int64)
    lo, hi = int(idx.min()), int(idx.max())
    counts = np.bincount(idx - lo, minlength=hi - lo + 1)
    lefts = (np.arange(lo, hi + 1)) * bin_width
    rights = (np.arange(lo, hi + 1) + 1) * bin_width
    densities = counts / (values.size * bin_width)
    return Histogram(lefts, rights, densities)


def mean_ci(sample, confidence: float = 0.95):
    """Sample mean and normal-approximation halfwidth z * s / sqrt(R)."""
    values = _as_values(sample)
    if values.size < 2:
        raise NumericalDomainError("need at least two replications")
    if not 0.0 < confidence < 1.0:
        raise ConfigurationError(
            f"confidence must be in (0, 1), got {confidence}")
    z = NormalDist().inv_cdf(0.5 * (1.0 + confidence))
    s = float(np.std(values, ddof=1))
    return float(np.mean(values)), z * s / math.sqrt(values.size)
