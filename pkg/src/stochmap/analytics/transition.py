"""Order-parameter sweeps, the critical conviction and variance growth of the opinion map."""

from __future__ import annotations

import math
from collections.abc import Callable, Sequence
from dataclasses import dataclass, field, replace

import numpy as np

from stochmap.engine import UNBOUNDED, AgentState, MapCoefficients, SimulationPlan, evolve_ensemble
from stochmap.regimes import Regime, RegimeTag, make_coefficients
from stochmap.rng import lyapunov_stream, spread_stream

ORDER_THRESHOLD = 1e-3
BISECTION_TOL = 1e-4
LYAPUNOV_DRAWS = 10**6
SWEEP_PLAN = SimulationPlan(seed=0, burn_in=10_000, samples=100, stride=10, replicas=20)
_DRAW_CHUNK = 1 << 22

Template = RegimeTag | str | Callable[[float], MapCoefficients]


def _coefficient_fn(template: Template) -> Callable[[float], MapCoefficients]:
    if callable(template) and not isinstance(template, str):
        return template
    tag = RegimeTag(template)
    return lambda lam: make_coefficients(Regime(tag, lam))


def mean_log_one_plus_eps(draws: int, seed: int = 0, eps_max: float = 1.0) -> float:
    """Monte Carlo estimate of E[log(1 + eps)] from ``draws`` fresh uniforms.

    Chunk sums are accumulated in a fixed order, so the estimate is reproducible.
    """
    if draws < 1:
        raise ValueError("draws must be >= 1")
    gen = lyapunov_stream(seed)
    sums = []
    left = draws
    while left:
        k = min(_DRAW_CHUNK, left)
        sums.append(float(np.sum(np.log1p(gen.random(k) * eps_max))))
        left -= k
    return math.fsum(sums) / draws


@dataclass
class SweepResult:
    lambda_grid: np.ndarray
    order_parameter: np.ndarray
    variance: np.ndarray
    lyapunov: np.ndarray
    mean_log_one_plus_eps: float
    lyapunov_draws: int
    template: Template = field(repr=False)
    plan: SimulationPlan = field(repr=False)


def order_parameter(
    coeffs: MapCoefficients, plan: SimulationPlan, threads: int = 1
) -> tuple[float, float]:
    """Mean and variance of m over all recorded samples of all replicas, starting from m = 1."""
    run = evolve_ensemble(AgentState(1.0), coeffs, plan, threads=threads)
    values = run.m.ravel()
    var = float(np.var(values, ddof=1)) if values.size > 1 else 0.0
    return float(np.mean(values)), var


def sweep_lambda(
    template: Template,
    lambda_grid: Sequence[float],
    plan: SimulationPlan = SWEEP_PLAN,
    *,
    lyapunov_draws: int = LYAPUNOV_DRAWS,
    threads: int = 1,
) -> SweepResult:
    """Long-time order parameter and variance at each lambda, plus log lam + E[log(1+eps)]."""
    grid = np.asarray(lambda_grid, dtype=float)
    if grid.ndim != 1 or grid.size == 0:
        raise ValueError("lambda grid must be a non-empty 1-d sequence")
    if np.any(np.diff(grid) <= 0):
        raise ValueError("lambda grid must be strictly increasing")
    if grid[0] < 0 or grid[-1] >= 1:
        raise ValueError("lambda grid must lie in [0, 1)")
    if lyapunov_draws < 1:
        raise ValueError("lyapunov_draws must be >= 1")
    make = _coefficient_fn(template)
    coeffs = [make(float(lam)) for lam in grid]
    results = [order_parameter(c, plan, threads) for c in coeffs]
    c = mean_log_one_plus_eps(lyapunov_draws, plan.seed, coeffs[0].eps_max)
    with np.errstate(divide="ignore"):
        lyap = np.log(grid) + c
    return SweepResult(
        grid,
        np.array([r[0] for r in results]),
        np.array([r[1] for r in results]),
        lyap,
        c,
        lyapunov_draws,
        template,
        plan,
    )


@dataclass(frozen=True)
class CriticalEstimate:
    lambda_c_lyapunov: float
    lambda_c_order: float


def estimate_critical_lambda(
    sweep: SweepResult,
    *,
    threshold: float = ORDER_THRESHOLD,
    tol: float = BISECTION_TOL,
    threads: int = 1,
) -> CriticalEstimate:
    """Critical lambda from the Lyapunov root and, as a cross-check, from the order parameter.

    The order-parameter estimate starts from the first grid interval where the
    order parameter crosses ``threshold`` and bisects it, re-running the engine
    at each midpoint, until the bracket is narrower than ``tol``.
    """
    lyap = sweep.lyapunov
    if not (np.any(lyap < 0) and np.any(lyap > 0)):
        raise ValueError("no Lyapunov sign change inside the lambda grid")
    lambda_lyap = math.exp(-sweep.mean_log_one_plus_eps)

    above = np.flatnonzero(sweep.order_parameter > threshold)
    if above.size == 0:
        raise ValueError(f"order parameter never exceeds {threshold:g} on the grid")
    i = int(above[0])
    if i == 0:
        raise ValueError("order parameter already exceeds the threshold at the first grid point")
    lo, hi = float(sweep.lambda_grid[i - 1]), float(sweep.lambda_grid[i])
    make = _coefficient_fn(sweep.template)
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if order_parameter(make(mid), sweep.plan, threads)[0] > threshold:
            hi = mid
        else:
            lo = mid
    return CriticalEstimate(lambda_lyap, 0.5 * (lo + hi))


def _stable_variance(x: np.ndarray) -> float:
    scale = float(np.max(np.abs(x)))
    if scale == 0 or not math.isfinite(scale):
        return 0.0 if scale == 0 else math.inf
    return float(np.var(x / scale, ddof=1)) * scale * scale


def variance_growth(
    lam: float,
    checkpoints: Sequence[int],
    plan: SimulationPlan,
    *,
    spread: tuple[float, float] | None = (0.5, 1.0),
    capped: bool = False,
    eps_max: float = 1.0,
    threads: int = 1,
) -> np.ndarray:
    """Ensemble variance of m at each checkpoint for m' = lam (1 + eps) m.

    Replicas start from ``m(0) ~ U[spread]`` (all at 1 when ``spread`` is None).
    The map is uncapped unless ``capped`` is set, in which case m <= 1.
    """
    if plan.replicas < 1000:
        raise ValueError(f"variance growth needs at least 1000 replicas, got {plan.replicas}")
    if capped:
        coeffs = make_coefficients(Regime(RegimeTag.OPINION, lam), eps_max=eps_max)
    else:
        coeffs = MapCoefficients(lam, lam, 0.0, 1.0, UNBOUNDED, eps_max=eps_max)
    if spread is None:
        starts: AgentState | list[AgentState] = AgentState(1.0)
    else:
        lo, hi = spread
        if not 0 <= lo < hi:
            raise ValueError(f"invalid spread [{lo}, {hi}]")
        m0 = spread_stream(plan.seed).uniform(lo, hi, plan.replicas)
        starts = [AgentState(float(m)) for m in m0]
    run = evolve_ensemble(
        starts, coeffs, replace(plan, burn_in=0), record_steps=checkpoints, threads=threads
    )
    return np.array([_stable_variance(run.m[:, j]) for j in range(run.m.shape[1])])
