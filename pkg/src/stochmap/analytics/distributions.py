"""Density estimates, moment summaries and the log-normality diagnostic."""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np


class Binning(str, Enum):
    LINEAR = "LINEAR"
    LOG = "LOG"

    @classmethod
    def parse(cls, value: str | Binning) -> Binning:
        return value if isinstance(value, cls) else cls(str(value).upper())


@dataclass(frozen=True)
class Histogram:
    edges: np.ndarray
    counts: np.ndarray
    density: np.ndarray
    binning: Binning

    @property
    def widths(self) -> np.ndarray:
        return np.diff(self.edges)

    @property
    def centers(self) -> np.ndarray:
        if self.binning is Binning.LOG:
            return np.sqrt(self.edges[:-1] * self.edges[1:])
        return 0.5 * (self.edges[:-1] + self.edges[1:])

    def density_at(self, x: float) -> float:
        """Density of the bin containing ``x`` (the last bin is closed on the right)."""
        if not self.edges[0] <= x <= self.edges[-1]:
            raise ValueError(f"{x} lies outside the histogram range [{self.edges[0]}, {self.edges[-1]}]")
        i = min(int(np.searchsorted(self.edges, x, side="right")) - 1, self.counts.size - 1)
        return float(self.density[i])


def _as_samples(samples) -> np.ndarray:
    x = np.asarray(samples, dtype=float).ravel()
    if x.size == 0:
        raise ValueError("no samples")
    if not np.all(np.isfinite(x)):
        raise ValueError("samples contain non-finite values")
    return x


def histogram(
    samples,
    bins: int = 50,
    binning: str | Binning = Binning.LINEAR,
    value_range: tuple[float, float] | None = None,
) -> Histogram:
    """Normalized histogram with equally spaced (LINEAR) or geometric (LOG) edges.

    Edges span ``[min, max]`` of the samples unless ``value_range`` is given, in
    which case samples outside the range are dropped before normalizing.
    """
    x = _as_samples(samples)
    binning = Binning.parse(binning)
    if bins < 1:
        raise ValueError(f"bins must be >= 1, got {bins}")
    if binning is Binning.LOG and np.any(x <= 0):
        raise ValueError("LOG binning requires strictly positive samples")
    lo, hi = (float(x.min()), float(x.max())) if value_range is None else map(float, value_range)
    if hi < lo:
        raise ValueError(f"empty range [{lo}, {hi}]")
    if binning is Binning.LOG:
        if lo <= 0:
            raise ValueError("LOG binning requires a positive range")
        if hi == lo:
            lo, hi = lo / math.e, hi * math.e
        edges = np.geomspace(lo, hi, bins + 1)
    else:
        if hi == lo:
            lo, hi = lo - 0.5, hi + 0.5
        edges = np.linspace(lo, hi, bins + 1)
    counts, _ = np.histogram(x, edges)
    total = counts.sum()
    if total == 0:
        raise ValueError("no samples fall inside the histogram range")
    density = counts / (total * np.diff(edges))
    return Histogram(edges, counts, density, binning)


@dataclass(frozen=True)
class MomentSummary:
    count: int
    mean: float
    variance: float
    skewness: float
    kurtosis: float  # excess


def moments(samples) -> MomentSummary:
    """Two-pass moments with the bias-corrected sample skewness and excess kurtosis.

    Skewness needs three samples and kurtosis four; below that, or for zero
    variance, they are NaN.
    """
    x = _as_samples(samples)
    n = x.size
    if n < 2:
        raise ValueError("moments need at least 2 samples")
    mean = float(np.mean(x))
    d = x - mean
    m2 = float(np.mean(d * d))
    variance = m2 * n / (n - 1)
    skew = kurt = math.nan
    if m2 > 0:
        m3 = float(np.mean(d**3))
        m4 = float(np.mean(d**4))
        if n > 2:
            skew = m3 / m2**1.5 * math.sqrt(n * (n - 1)) / (n - 2)
        if n > 3:
            g2 = m4 / m2**2 - 3.0
            kurt = ((n + 1) * g2 + 6.0) * (n - 1) / ((n - 2) * (n - 3))
    return MomentSummary(n, mean, variance, skew, kurt)


def log_growth_drift(eps_max: float = 1.0) -> float:
    """E[log(1 + eps)] for eps ~ U[0, eps_max)."""
    if not eps_max > 0:
        raise ValueError("eps_max must be positive")
    return ((1.0 + eps_max) * math.log1p(eps_max) - eps_max) / eps_max


def multiplicative_drift(lam: float, eps_max: float = 1.0) -> float:
    """Per-step drift of log m under m' = lam (1 + eps) m."""
    return math.log(lam) + log_growth_drift(eps_max)


@dataclass(frozen=True)
class NormalityResult:
    skewness: float
    excess_kurtosis: float
    mean: float
    variance: float
    count: int


def normality_check(
    values,
    steps: int,
    drift_per_step: float,
    *,
    is_log: bool = True,
    log_m0: float = 0.0,
) -> NormalityResult:
    """Moments of ``(log m(T) - log m(0) - T * drift) / sqrt(T)`` across replicas.

    ``values`` are ``log m`` samples, or ``m`` itself when ``is_log`` is false.
    For Gibrat growth the drift is :func:`log_growth_drift`; for the
    near-critical multiplicative map use :func:`multiplicative_drift`.
    """
    if steps < 1:
        raise ValueError("steps must be >= 1")
    v = np.asarray(values, dtype=float).ravel()
    if not is_log:
        if np.any(~(v > 0)):
            raise ValueError("normality check needs strictly positive m")
        v = np.log(v)
    scaled = (v - log_m0 - steps * drift_per_step) / math.sqrt(steps)
    s = moments(scaled)
    return NormalityResult(s.skewness, s.kurtosis, s.mean, s.variance, s.count)
