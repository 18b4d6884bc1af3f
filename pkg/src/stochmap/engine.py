"""Monte Carlo engine for the capped multiplicative-additive map.

One step of the map is::

    m' = min((lambda1 + eps * lambda2) * m + xi * lambda3**n, theta)

with ``eps ~ U[0, eps_max)`` and ``xi ~ U[0, 1)``. When ``lambda3 == 0`` the
map is purely multiplicative and the engine carries ``log m`` alongside ``m``;
the log shadow stays finite after ``m`` underflows, which is what the
sub-critical opinion runs and long Gibrat runs need.

The inner loop is compiled with numba. Noise is drawn in chunks from a Philox
stream, epsilon before xi at every step, so a run can be replayed draw by draw
with :func:`next_noise` and :func:`step`.
"""

from __future__ import annotations

import math
from collections.abc import Callable, Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import TypeVar

import numpy as np
from numba import njit

from stochmap.rng import agent_stream, check_seed

UNBOUNDED = math.inf
N_MIN = -100.0
TINY = 1e-300
LOG_TINY = math.log(TINY)
_CHUNK = 1 << 16
_SUM_TOL = 1e-12

T = TypeVar("T")
R = TypeVar("R")


@dataclass(frozen=True)
class MapCoefficients:
    """Parameters of one agent's map.

    ``coupled`` makes xi identical to eps at every step. ``eps_max`` narrows the
    multiplicative noise to ``U[0, eps_max)`` (used for small-noise Gibrat runs).
    """

    lambda1: float
    lambda2: float
    lambda3: float
    n: float = 1.0
    theta: float = UNBOUNDED
    coupled: bool = False
    eps_max: float = 1.0
    additive_scale: float = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        for name in ("lambda1", "lambda2", "lambda3"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {v}")
        if not (math.isfinite(self.n) and N_MIN <= self.n <= 1.0):
            raise ValueError(f"n must be finite and in [{N_MIN:g}, 1], got {self.n}")
        if not self.theta > 0.0:
            raise ValueError(f"theta must be positive, got {self.theta}")
        if not 0.0 < self.eps_max <= 1.0:
            raise ValueError(f"eps_max must lie in (0, 1], got {self.eps_max}")
        # savings factor must stay below one whenever there is income and no cap
        if (
            self.theta == UNBOUNDED
            and self.lambda3 > 0.0
            and self.lambda1 + self.lambda2 * self.eps_max > 1.0 + _SUM_TOL
        ):
            raise ValueError(
                "lambda1 + eps_max*lambda2 must not exceed 1 for an uncapped map "
                f"with income (got {self.lambda1} + {self.eps_max}*{self.lambda2})"
            )
        if self.lambda3 == 0.0:
            scale = 0.0
        else:
            try:
                scale = self.lambda3**self.n
            except OverflowError:
                scale = math.inf
            if not math.isfinite(scale):
                raise ValueError(f"lambda3**n overflows for lambda3={self.lambda3}, n={self.n}")
        object.__setattr__(self, "additive_scale", float(scale))

    @property
    def multiplicative(self) -> bool:
        return self.lambda3 == 0.0

    @property
    def bounded(self) -> bool:
        return math.isfinite(self.theta)

    @property
    def draws_xi(self) -> bool:
        return not self.coupled and not self.multiplicative


@dataclass(frozen=True)
class AgentState:
    """Wealth (or opinion) ``m`` of one agent, its propensity ``lam`` and ``log m``."""

    m: float = 1.0
    lam: float = 0.0
    log_m: float | None = None

    def __post_init__(self):
        if not self.m >= 0.0:
            raise ValueError(f"m must be non-negative, got {self.m}")
        if not 0.0 <= self.lam < 1.0:
            raise ValueError(f"lam must lie in [0, 1), got {self.lam}")
        if self.log_m is None:
            object.__setattr__(self, "log_m", math.log(self.m) if self.m > 0 else -math.inf)


@dataclass(frozen=True)
class NoiseDraw:
    epsilon: float
    xi: float
    coupled: bool = False

    def __post_init__(self):
        if self.coupled and self.xi != self.epsilon:
            raise ValueError("coupled noise requires xi == epsilon")


@dataclass(frozen=True)
class SimulationPlan:
    """Run protocol: discard ``burn_in`` steps, then record every ``stride`` steps."""

    seed: int = 0
    burn_in: int = 10_000
    samples: int = 100_000
    stride: int = 1
    replicas: int = 1

    def __post_init__(self):
        check_seed(self.seed)
        for name, lo in (("burn_in", 0), ("samples", 1), ("stride", 1), ("replicas", 1)):
            v = getattr(self, name)
            if isinstance(v, bool) or not isinstance(v, (int, np.integer)):
                raise TypeError(f"{name} must be an integer")
            if v < lo:
                raise ValueError(f"{name} must be >= {lo}, got {v}")

    @property
    def total_steps(self) -> int:
        return self.burn_in + self.samples * self.stride

    def record_steps(self) -> np.ndarray:
        return self.burn_in + self.stride * np.arange(1, self.samples + 1, dtype=np.int64)


@dataclass
class Trajectory:
    """Recorded values; the last axis indexes samples (or checkpoints)."""

    m: np.ndarray
    log_m: np.ndarray
    final: AgentState | list = field(repr=False)

    def pooled(self) -> np.ndarray:
        return self.m.ravel()


def step(state: AgentState, coeffs: MapCoefficients, noise: NoiseDraw) -> AgentState:
    """Apply the map once. Mirrors the compiled kernel operation for operation."""
    a = coeffs.lambda1 + noise.epsilon * coeffs.lambda2
    m, log_m = state.m, state.log_m
    if coeffs.multiplicative:
        log_a = math.log(a) if a > 0.0 else -math.inf
        log_m = min(log_m + log_a, math.log(coeffs.theta))
        if m > 0.0:
            m = min(a * m, coeffs.theta)
        if m < TINY:
            m = math.exp(log_m) if log_m >= LOG_TINY else 0.0
    else:
        m = min(a * m + noise.xi * coeffs.additive_scale, coeffs.theta)
        log_m = math.log(m) if m > 0.0 else -math.inf
    return AgentState(m=m, lam=state.lam, log_m=log_m)


def next_noise(gen: np.random.Generator, coeffs: MapCoefficients) -> NoiseDraw:
    """Draw one step's noise in the engine's order: eps first, then xi if needed."""
    eps = gen.random() * coeffs.eps_max
    if coeffs.coupled:
        return NoiseDraw(eps, eps, coupled=True)
    xi = gen.random() if coeffs.draws_xi else 0.0
    return NoiseDraw(eps, xi)


def _draw_chunk(gen: np.random.Generator, coeffs: MapCoefficients, length: int):
    if coeffs.draws_xi:
        u = gen.random(2 * length).reshape(length, 2)
        return np.ascontiguousarray(u[:, 0]) * coeffs.eps_max, np.ascontiguousarray(u[:, 1])
    eps = gen.random(length) * coeffs.eps_max
    return eps, eps


@njit(cache=True, nogil=True)
def _advance(m, log_m, step0, eps, xi, lam1, lam2, add, theta, log_theta,
             multiplicative, record_steps, pos, out_m, out_log):
    n_rec = record_steps.shape[0]
    for k in range(eps.shape[0]):
        a = lam1 + eps[k] * lam2
        if multiplicative:
            log_a = math.log(a) if a > 0.0 else -math.inf
            log_m = min(log_m + log_a, log_theta)
            if m > 0.0:
                m = min(a * m, theta)
            if m < TINY:
                m = math.exp(log_m) if log_m >= LOG_TINY else 0.0
        else:
            m = min(a * m + xi[k] * add, theta)
            log_m = math.log(m) if m > 0.0 else -math.inf
        t = step0 + k + 1
        while pos < n_rec and record_steps[pos] == t:
            out_m[pos] = m
            out_log[pos] = log_m
            pos += 1
    return m, log_m, pos


def simulate(
    state: AgentState,
    coeffs: MapCoefficients,
    gen: np.random.Generator,
    record_steps: Sequence[int] | np.ndarray,
) -> Trajectory:
    """Run from ``state`` and record ``m`` after each step count in ``record_steps``.

    ``record_steps`` must be strictly increasing positive integers.
    """
    record = np.asarray(record_steps, dtype=np.int64)
    if record.ndim != 1 or record.size == 0:
        raise ValueError("record_steps must be a non-empty 1-d sequence")
    if record[0] < 1 or np.any(np.diff(record) <= 0):
        raise ValueError("record_steps must be strictly increasing and >= 1")
    out_m = np.empty(record.size)
    out_log = np.empty(record.size)
    m, log_m, pos = float(state.m), float(state.log_m), 0
    log_theta = math.log(coeffs.theta)
    total = int(record[-1])
    t = 0
    while t < total:
        length = min(_CHUNK, total - t)
        eps, xi = _draw_chunk(gen, coeffs, length)
        m, log_m, pos = _advance(
            m, log_m, t, eps, xi, coeffs.lambda1, coeffs.lambda2, coeffs.additive_scale,
            coeffs.theta, log_theta, coeffs.multiplicative, record, pos, out_m, out_log,
        )
        t += length
    return Trajectory(out_m, out_log, AgentState(m=m, lam=state.lam, log_m=log_m))


def evolve(
    initial: AgentState,
    coeffs: MapCoefficients,
    plan: SimulationPlan,
    *,
    agent: int = 0,
    replica: int = 0,
) -> Trajectory:
    """Evolve one agent in one replica; returns ``plan.samples`` recorded values."""
    gen = agent_stream(plan.seed, agent, replica)
    return simulate(initial, coeffs, gen, plan.record_steps())


def parallel_map(fn: Callable[[T], R], items: Sequence[T], threads: int = 1) -> list[R]:
    """Order-preserving map; the compiled kernel releases the GIL."""
    if threads == 0:
        import os

        threads = os.cpu_count() or 1
    if threads <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def evolve_ensemble(
    initial: AgentState | Sequence[AgentState],
    coeffs: MapCoefficients,
    plan: SimulationPlan,
    *,
    agent: int = 0,
    record_steps: Sequence[int] | None = None,
    threads: int = 1,
) -> Trajectory:
    """Evolve ``plan.replicas`` independent replicas of one agent.

    ``initial`` may be one state shared by all replicas or one state per replica.
    Arrays in the result have shape ``(replicas, samples)``.
    """
    if isinstance(initial, AgentState):
        starts = [initial] * plan.replicas
    else:
        starts = list(initial)
        if len(starts) != plan.replicas:
            raise ValueError("need one initial state per replica")
    record = plan.record_steps() if record_steps is None else np.asarray(record_steps)

    def run(r):
        return simulate(starts[r], coeffs, agent_stream(plan.seed, agent, r), record)

    runs = parallel_map(run, range(plan.replicas), threads)
    return Trajectory(
        np.stack([t.m for t in runs]),
        np.stack([t.log_m for t in runs]),
        [t.final for t in runs],
    )


def evolve_population(
    population: Sequence[AgentState],
    coeffs: MapCoefficients | Sequence[MapCoefficients],
    plan: SimulationPlan,
    *,
    threads: int = 1,
) -> Trajectory:
    """Evolve non-interacting agents, each on its own (seed, agent, replica) stream.

    Arrays in the result have shape ``(agents, replicas, samples)`` ordered by
    agent index.
    """
    population = list(population)
    if not population:
        raise ValueError("population is empty")
    if isinstance(coeffs, MapCoefficients):
        per_agent = [coeffs] * len(population)
    else:
        per_agent = list(coeffs)
        if len(per_agent) != len(population):
            raise ValueError("need one MapCoefficients per agent")
    record = plan.record_steps()
    jobs = [(i, r) for i in range(len(population)) for r in range(plan.replicas)]

    def run(job):
        i, r = job
        return simulate(population[i], per_agent[i], agent_stream(plan.seed, i, r), record)

    runs = parallel_map(run, jobs, threads)
    shape = (len(population), plan.replicas, record.size)
    m = np.stack([t.m for t in runs]).reshape(shape)
    log_m = np.stack([t.log_m for t in runs]).reshape(shape)
    return Trajectory(m, log_m, [t.final for t in runs])
