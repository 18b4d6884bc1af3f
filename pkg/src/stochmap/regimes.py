"""Named parameterizations of the map and schemes for assigning savings propensities."""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from stochmap.engine import UNBOUNDED, AgentState, MapCoefficients
from stochmap.rng import population_stream

# largest propensity handed to an agent; keeps (1 - lam)**(n - 1) finite
LAMBDA_CAP = 1.0 - 2.0**-20
DEFAULT_POWER_N = -20.0


class RegimeTag(str, Enum):
    SKEWED_INDEPENDENT = "SKEWED_INDEPENDENT"
    SKEWED_COUPLED = "SKEWED_COUPLED"
    POWER_LAW = "POWER_LAW"
    OPINION = "OPINION"
    GIBRAT = "GIBRAT"


@dataclass(frozen=True)
class Regime:
    tag: RegimeTag
    lam: float = 0.0
    n: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "tag", RegimeTag(self.tag))
        if not 0.0 <= self.lam <= 1.0:
            raise ValueError(f"lambda must lie in [0, 1], got {self.lam}")
        if self.tag is RegimeTag.POWER_LAW:
            n = DEFAULT_POWER_N if self.n is None else self.n
            if n > 0:
                raise ValueError(f"POWER_LAW requires n <= 0, got {n}")
            object.__setattr__(self, "n", float(n))


def make_coefficients(regime: Regime, *, eps_max: float = 1.0) -> MapCoefficients:
    """Coefficient tuple for a named regime.

    ``eps_max`` only applies to the multiplicative regimes (OPINION, GIBRAT).
    """
    lam, tag = regime.lam, regime.tag
    if eps_max != 1.0 and tag not in (RegimeTag.OPINION, RegimeTag.GIBRAT):
        raise ValueError(f"eps_max is only supported for OPINION and GIBRAT, not {tag.value}")
    if tag is RegimeTag.SKEWED_INDEPENDENT:
        return MapCoefficients(lam, 1.0 - lam, 1.0 - lam, 1.0, UNBOUNDED)
    if tag is RegimeTag.SKEWED_COUPLED:
        return MapCoefficients(lam, 1.0 - lam, 1.0 - lam, 1.0, UNBOUNDED, coupled=True)
    if tag is RegimeTag.POWER_LAW:
        return MapCoefficients(lam, 1.0 - lam, 1.0 - lam, regime.n, UNBOUNDED)
    if tag is RegimeTag.OPINION:
        return MapCoefficients(lam, lam, 0.0, 1.0, 1.0, eps_max=eps_max)
    if tag is RegimeTag.GIBRAT:
        return MapCoefficients(1.0, 1.0, 0.0, 1.0, UNBOUNDED, eps_max=eps_max)
    raise ValueError(f"unknown regime {tag!r}")


class SchemeKind(str, Enum):
    CONSTANT = "CONSTANT"
    UNIFORM_RANDOM = "UNIFORM_RANDOM"
    DETERMINISTIC_RAMP = "DETERMINISTIC_RAMP"


@dataclass(frozen=True)
class LambdaScheme:
    kind: SchemeKind
    value: float | None = None
    lo: float | None = None
    hi: float | None = None
    lambda_max: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "kind", SchemeKind(self.kind))
        if self.kind is SchemeKind.CONSTANT:
            if self.value is None or not 0.0 <= self.value < 1.0:
                raise ValueError(f"CONSTANT scheme needs value in [0, 1), got {self.value}")
        elif self.kind is SchemeKind.UNIFORM_RANDOM:
            if self.lo is None or self.hi is None:
                raise ValueError("UNIFORM_RANDOM scheme needs lo and hi")
            if not 0.0 <= self.lo < self.hi <= 1.0:
                raise ValueError(f"UNIFORM_RANDOM needs 0 <= lo < hi <= 1, got [{self.lo}, {self.hi}]")
        else:
            if self.lambda_max is None or not 0.0 < self.lambda_max < 1.0:
                raise ValueError(
                    f"DETERMINISTIC_RAMP needs 0 < lambda_max < 1, got {self.lambda_max}"
                )

    @classmethod
    def constant(cls, value: float) -> LambdaScheme:
        return cls(SchemeKind.CONSTANT, value=value)

    @classmethod
    def uniform(cls, lo: float = 0.0, hi: float = 1.0) -> LambdaScheme:
        return cls(SchemeKind.UNIFORM_RANDOM, lo=lo, hi=hi)

    @classmethod
    def ramp(cls, lambda_max: float) -> LambdaScheme:
        return cls(SchemeKind.DETERMINISTIC_RAMP, lambda_max=lambda_max)


def assign_lambdas(size: int, scheme: LambdaScheme, seed: int = 0) -> np.ndarray:
    """Propensities for ``size`` agents; the ramp gives agent i (1-based) ``i/N * lambda_max``."""
    if size < 1:
        raise ValueError(f"population size must be >= 1, got {size}")
    if scheme.kind is SchemeKind.CONSTANT:
        return np.full(size, float(scheme.value))
    if scheme.kind is SchemeKind.DETERMINISTIC_RAMP:
        return np.arange(1, size + 1) / size * scheme.lambda_max
    hi = min(scheme.hi, LAMBDA_CAP)
    lam = population_stream(seed).uniform(scheme.lo, hi, size)
    # uniform(lo, hi) may round up to hi
    return np.minimum(lam, math.nextafter(hi, 0.0))


def build_population(size: int, scheme: LambdaScheme, seed: int = 0) -> list[AgentState]:
    """``size`` agents, each starting at m = 1 with a fixed propensity."""
    return [AgentState(m=1.0, lam=float(lam)) for lam in assign_lambdas(size, scheme, seed)]


def population_coefficients(
    tag: RegimeTag | str, population: list[AgentState], n: float | None = None
) -> list[MapCoefficients]:
    """Per-agent coefficients of regime ``tag`` at each agent's own propensity."""
    return [make_coefficients(Regime(tag, agent.lam, n)) for agent in population]
