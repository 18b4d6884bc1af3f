"""Closed-form reference values for the named regimes."""

from __future__ import annotations

import math
from collections.abc import Callable
from dataclasses import dataclass

_OVERFLOW = 1e300


def stationary_mean_skewed() -> float:
    """Stationary mean of m' = (lam + eps(1-lam)) m + xi(1-lam); independent of lam."""
    return 1.0


def _check_lambda(lam: float) -> None:
    if not 0.0 <= lam <= 1.0:
        raise ValueError(f"lambda must lie in [0, 1], got {lam}")


def stationary_variance_independent(lam: float) -> float:
    """(1 - lam) / (2 (2 + lam)); zero at lam = 1 where the law is a point mass."""
    _check_lambda(lam)
    return (1.0 - lam) / (2.0 * (2.0 + lam))


def stationary_variance_coupled(lam: float) -> float:
    """(1 - lam) / (2 + lam) for the map driven by a single noise (xi = eps)."""
    _check_lambda(lam)
    return (1.0 - lam) / (2.0 + lam)


def mean_power(lam: float, n: float) -> float:
    """Stationary mean (1 - lam)**(n - 1) of one agent in the power-law regime."""
    if not 0.0 <= lam <= 1.0:
        raise ValueError(f"lambda must lie in [0, 1], got {lam}")
    if n > 1:
        raise ValueError(f"n must be <= 1, got {n}")
    if n == 1:
        return 1.0
    if lam == 1.0:
        raise ValueError("mean diverges at lambda = 1 for n < 1")
    try:
        value = (1.0 - lam) ** (n - 1.0)
    except OverflowError:
        value = math.inf
    if value > _OVERFLOW:
        raise ValueError(f"mean (1-lambda)^(n-1) exceeds {_OVERFLOW:g} for lambda={lam}, n={n}")
    return value


def tail_exponent(n: float) -> float:
    """Density exponent (n - 2)/(n - 1) of the pooled law for uniformly spread lambda."""
    if n > 0:
        raise ValueError(f"tail exponent is defined for n <= 0, got {n}")
    if n == -math.inf:
        return 1.0
    return (n - 2.0) / (n - 1.0)


def mean_log_one_plus_eps() -> float:
    """E[log(1 + eps)] for eps ~ U[0, 1), equal to 2 log 2 - 1."""
    return 2.0 * math.log(2.0) - 1.0


def critical_lambda() -> float:
    """Root of log lam + E[log(1 + eps)]: exp(1 - 2 log 2) = e/4."""
    return math.exp(-mean_log_one_plus_eps())


@dataclass(frozen=True)
class OracleValue:
    value: float
    source: str
    validity: str


@dataclass(frozen=True)
class _Entry:
    fn: Callable[..., float]
    params: tuple[str, ...]
    source: str
    validity: str


ORACLES: dict[str, _Entry] = {
    "stationary_mean": _Entry(
        stationary_mean_skewed, (),
        "<m> = 1 from taking expectations of m' = (lam + eps(1-lam)) m + xi(1-lam)",
        "0 <= lambda <= 1",
    ),
    "variance_independent": _Entry(
        stationary_variance_independent, ("lambda",),
        "V(m) = (1-lam)/(2(2+lam)), independent eps and xi",
        "0 <= lambda <= 1",
    ),
    "variance_coupled": _Entry(
        stationary_variance_coupled, ("lambda",),
        "V(m) = (1-lam)/(2+lam), xi = eps",
        "0 <= lambda <= 1",
    ),
    "mean_power": _Entry(
        mean_power, ("lambda", "n"),
        "(1-lam)^(1-n) <m> = 1 for m' = (lam + eps(1-lam)) m + xi(1-lam)^n",
        "0 <= lambda < 1, n <= 1",
    ),
    "tail_exponent": _Entry(
        tail_exponent, ("n",),
        "P(m) ~ m^-((n-2)/(n-1)) for lambda uniform over the population",
        "n <= 0",
    ),
    "critical_lambda": _Entry(
        critical_lambda, (),
        "-log lam_c = <log(1+eps)> = 2 log 2 - 1, so lam_c = e/4",
        "eps ~ U[0, 1)",
    ),
}


def evaluate(name: str, *params: float) -> OracleValue:
    """Look up an oracle by name and evaluate it; raises KeyError for unknown names."""
    entry = ORACLES[name]
    if len(params) != len(entry.params):
        raise ValueError(
            f"{name} takes {len(entry.params)} parameter(s) ({', '.join(entry.params) or 'none'}),"
            f" got {len(params)}"
        )
    return OracleValue(entry.fn(*params), entry.source, entry.validity)
