"""Estimators applied to engine output."""

from stochmap.analytics.distributions import (
    Binning,
    Histogram,
    MomentSummary,
    NormalityResult,
    histogram,
    log_growth_drift,
    moments,
    multiplicative_drift,
    normality_check,
)
from stochmap.analytics.tails import (
    TailFit,
    TailMethod,
    conditional_density_locus,
    fit_tail,
    local_slopes,
    locus_slope,
    power_law_span,
)
from stochmap.analytics.transition import (
    CriticalEstimate,
    SweepResult,
    estimate_critical_lambda,
    mean_log_one_plus_eps,
    order_parameter,
    sweep_lambda,
    variance_growth,
)

__all__ = [
    "Binning",
    "CriticalEstimate",
    "Histogram",
    "MomentSummary",
    "NormalityResult",
    "SweepResult",
    "TailFit",
    "TailMethod",
    "conditional_density_locus",
    "estimate_critical_lambda",
    "fit_tail",
    "histogram",
    "local_slopes",
    "locus_slope",
    "log_growth_drift",
    "mean_log_one_plus_eps",
    "moments",
    "multiplicative_drift",
    "normality_check",
    "order_parameter",
    "power_law_span",
    "sweep_lambda",
    "variance_growth",
]
