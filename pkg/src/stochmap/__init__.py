"""Seeded Monte Carlo for a capped multiplicative-additive stochastic map.

The map covers skewed wealth laws, power-law tails from heterogeneous savings,
the opinion-formation transition and Gibrat growth as special cases.
"""

from stochmap.engine import (
    UNBOUNDED,
    AgentState,
    MapCoefficients,
    NoiseDraw,
    SimulationPlan,
    Trajectory,
    evolve,
    evolve_ensemble,
    evolve_population,
    next_noise,
    simulate,
    step,
)
from stochmap.regimes import (
    LambdaScheme,
    Regime,
    RegimeTag,
    SchemeKind,
    build_population,
    make_coefficients,
    population_coefficients,
)

__version__ = "0.1.0"

__all__ = [
    "UNBOUNDED",
    "AgentState",
    "LambdaScheme",
    "MapCoefficients",
    "NoiseDraw",
    "Regime",
    "RegimeTag",
    "SchemeKind",
    "SimulationPlan",
    "Trajectory",
    "build_population",
    "evolve",
    "evolve_ensemble",
    "evolve_population",
    "make_coefficients",
    "next_noise",
    "population_coefficients",
    "simulate",
    "step",
]
