"""Power-law tail estimation and the conditional-density locus."""

from __future__ import annotations

import math
from collections.abc import Sequence
from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy import stats

from stochmap.analytics.distributions import Binning, histogram

MIN_TAIL = 10
DEFAULT_XMIN_QUANTILE = 0.9
BINS_PER_DECADE = 10


class TailMethod(str, Enum):
    HILL = "HILL"
    LOGLOG_REGRESSION = "LOGLOG_REGRESSION"

    @classmethod
    def parse(cls, value: str | TailMethod) -> TailMethod:
        if isinstance(value, cls):
            return value
        key = str(value).upper()
        return cls.LOGLOG_REGRESSION if key == "LOGLOG" else cls(key)


@dataclass(frozen=True)
class TailFit:
    exponent: float
    xmin: float
    stderr: float
    n_tail: int
    method: TailMethod
    xmax: float | None = None

    def as_dict(self) -> dict:
        return {
            "exponent": self.exponent,
            "xmin": self.xmin,
            "stderr": self.stderr,
            "n_tail": self.n_tail,
            "method": self.method.value,
        }


def _resolve_bound(x, value, quantile, name):
    if value is not None:
        bound = float(value)
    elif quantile is not None:
        if not 0.0 <= quantile < 1.0:
            raise ValueError(f"{name}_quantile must lie in [0, 1), got {quantile}")
        bound = float(np.quantile(x, quantile))
    else:
        return None
    return bound


def fit_tail(
    samples,
    method: str | TailMethod = TailMethod.HILL,
    *,
    xmin: float | None = None,
    xmin_quantile: float | None = DEFAULT_XMIN_QUANTILE,
    xmax: float | None = None,
    xmax_quantile: float | None = None,
    bins_per_decade: int = BINS_PER_DECADE,
) -> TailFit:
    """Fit the density exponent alpha of ``P(x) ~ x**-alpha`` above ``xmin``.

    HILL is the maximum-likelihood estimate ``1 + k / sum(log(x_i / xmin))``
    over the k samples at or above ``xmin``. LOGLOG_REGRESSION regresses log
    density on log bin centre over geometric bins in ``[xmin, xmax]``; use the
    upper bound when the law has a finite cutoff.
    """
    method = TailMethod.parse(method)
    x = np.asarray(samples, dtype=float).ravel()
    x = x[np.isfinite(x)]
    if x.size == 0:
        raise ValueError("no finite samples")
    lo = _resolve_bound(x, xmin, xmin_quantile, "xmin")
    if lo is None:
        lo = float(x.min())
    if not lo > 0:
        raise ValueError(f"xmin must be positive, got {lo}")
    hi = _resolve_bound(x, xmax, xmax_quantile, "xmax")
    if hi is not None and method is TailMethod.HILL:
        raise ValueError("HILL does not support an upper cutoff; use LOGLOG_REGRESSION")
    tail = x[x >= lo] if hi is None else x[(x >= lo) & (x <= hi)]
    k = tail.size
    if k < MIN_TAIL:
        raise ValueError(f"only {k} samples in the tail, need at least {MIN_TAIL}")

    if method is TailMethod.HILL:
        log_sum = float(np.sum(np.log(tail / lo)))
        if log_sum <= 0:
            raise ValueError("all tail samples equal xmin; exponent undefined")
        alpha = 1.0 + k / log_sum
        return TailFit(alpha, lo, (alpha - 1.0) / math.sqrt(k), k, method)

    top = float(tail.max())
    if top <= lo:
        raise ValueError("all tail samples equal xmin; exponent undefined")
    nbins = max(2, math.ceil(math.log10(top / lo) * bins_per_decade))
    h = histogram(tail, nbins, Binning.LOG, value_range=(lo, top))
    keep = h.counts > 0
    if keep.sum() < 3:
        raise ValueError("fewer than 3 occupied bins in the tail")
    fit = stats.linregress(np.log10(h.centers[keep]), np.log10(h.density[keep]))
    return TailFit(-float(fit.slope), lo, float(fit.stderr), k, method, hi)


def local_slopes(
    samples, *, bins_per_decade: int = BINS_PER_DECADE, window: int = 5, min_count: int = 1
) -> tuple[np.ndarray, np.ndarray]:
    """Sliding-window log-log slopes of a log-binned density.

    Returns the geometric centre of each window and the least-squares slope of
    log density over that window's bins. Bins with fewer than ``min_count``
    samples break the sequence.
    """
    x = np.asarray(samples, dtype=float).ravel()
    x = x[np.isfinite(x) & (x > 0)]
    if x.size == 0:
        raise ValueError("no positive samples")
    decades = math.log10(x.max() / x.min())
    nbins = max(window, math.ceil(decades * bins_per_decade))
    h = histogram(x, nbins, Binning.LOG)
    lc = np.log10(h.centers)
    with np.errstate(divide="ignore"):
        ld = np.log10(h.density)
    ok = h.counts >= min_count
    centers, slopes = [], []
    for i in range(h.counts.size - window + 1):
        sl = slice(i, i + window)
        centers.append(10 ** lc[sl].mean())
        slopes.append(np.polyfit(lc[sl], ld[sl], 1)[0] if ok[sl].all() else math.nan)
    return np.asarray(centers), np.asarray(slopes)


def power_law_span(
    samples,
    target: float = -2.0,
    tol: float = 0.2,
    *,
    bins_per_decade: int = BINS_PER_DECADE,
    window: int = 5,
    min_count: int = 1,
) -> float:
    """Width in decades of the longest run of windows with slope within ``tol`` of ``target``."""
    centers, slopes = local_slopes(
        samples, bins_per_decade=bins_per_decade, window=window, min_count=min_count
    )
    inside = np.abs(slopes - target) <= tol
    best, start = 0.0, None
    for i, flag in enumerate(inside):
        if flag and start is None:
            start = i
        if start is not None and (not flag or i == inside.size - 1):
            end = i if flag else i - 1
            best = max(best, math.log10(centers[end] / centers[start]))
            start = None
    return best


def conditional_density_locus(
    groups: Sequence, *, bins: int = 50, min_size: int = 1000
) -> list[tuple[float, float]]:
    """For each group of same-lambda samples, (mean, density of the group at its mean)."""
    points = []
    for i, g in enumerate(groups):
        x = np.asarray(g, dtype=float).ravel()
        if x.size < min_size:
            raise ValueError(f"group {i} has {x.size} samples, need at least {min_size}")
        mean = float(np.mean(x))
        h = histogram(x, bins)
        points.append((mean, h.density_at(mean)))
    return points


def locus_slope(points: Sequence[tuple[float, float]]) -> float:
    """Slope of log density-at-mean against log mean."""
    if len(points) < 2:
        raise ValueError("need at least two locus points for a slope")
    mean, dens = np.asarray(points, dtype=float).T
    return float(stats.linregress(np.log(mean), np.log(dens)).slope)
