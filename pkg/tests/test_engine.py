import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from stochmap import (
    UNBOUNDED,
    AgentState,
    MapCoefficients,
    NoiseDraw,
    Regime,
    SimulationPlan,
    evolve,
    evolve_ensemble,
    evolve_population,
    make_coefficients,
    next_noise,
    simulate,
    step,
)
from stochmap.rng import agent_stream, check_seed

LOG_ONE_PLUS_EPS = 2 * math.log(2) - 1


def test_step_skewed_substitution():
    out = step(AgentState(1.0), MapCoefficients(0.4, 0.6, 0.6, 1.0), NoiseDraw(0.5, 0.5))
    assert out.m == pytest.approx(1.0, abs=1e-15)


def test_step_opinion_cap_binds():
    coeffs = MapCoefficients(0.8, 0.8, 0.0, 1.0, theta=1.0)
    out = step(AgentState(0.9), coeffs, NoiseDraw(0.9, 0.0))
    assert out.m == 1.0
    assert out.log_m == 0.0


def test_step_gibrat():
    coeffs = MapCoefficients(1.0, 1.0, 0.0)
    out = step(AgentState(2.0), coeffs, NoiseDraw(0.05, 0.0))
    assert out.m == pytest.approx(2.1)
    assert out.log_m == pytest.approx(math.log(2.1))


def test_zero_lambda3_ignores_n():
    coeffs = MapCoefficients(0.5, 0.5, 0.0, n=-50.0)
    assert coeffs.additive_scale == 0.0
    assert coeffs.multiplicative


@pytest.mark.parametrize(
    "kwargs",
    [
        dict(lambda1=1.2, lambda2=0.0, lambda3=0.0),
        dict(lambda1=0.5, lambda2=0.5, lambda3=0.5, n=2.0),
        dict(lambda1=0.5, lambda2=0.5, lambda3=0.5, n=-101.0),
        dict(lambda1=0.5, lambda2=0.5, lambda3=0.5, theta=0.0),
        dict(lambda1=0.6, lambda2=0.6, lambda3=0.5),
    ],
)
def test_invalid_coefficients(kwargs):
    with pytest.raises(ValueError):
        MapCoefficients(**kwargs)


def test_opinion_factor_above_one_allowed_with_cap():
    MapCoefficients(0.9, 0.9, 0.0, theta=1.0)


def test_plan_validation():
    with pytest.raises(ValueError):
        SimulationPlan(samples=0)
    with pytest.raises(ValueError):
        SimulationPlan(stride=0)
    with pytest.raises(ValueError):
        SimulationPlan(seed=-1)
    with pytest.raises(ValueError):
        check_seed(2**64)


def test_coupled_noise_requires_equal_draws():
    with pytest.raises(ValueError):
        NoiseDraw(0.1, 0.2, coupled=True)


def test_evolve_point_mass_at_lambda_one():
    coeffs = make_coefficients(Regime("SKEWED_INDEPENDENT", 1.0))
    run = evolve(AgentState(1.0), coeffs, SimulationPlan(seed=3, burn_in=10, samples=50))
    assert np.all(run.m == 1.0)


def test_gibrat_matches_replayed_products():
    plan = SimulationPlan(seed=11, burn_in=0, samples=3, stride=1)
    run = evolve(AgentState(1.0), make_coefficients(Regime("GIBRAT", 1.0)), plan)
    draws = agent_stream(11, 0, 0).random(3)
    expected = np.cumprod(1.0 + draws)
    np.testing.assert_array_equal(run.m, expected)


def test_subcritical_opinion_underflows_but_log_stays_finite():
    t = 10_000
    coeffs = make_coefficients(Regime("OPINION", 0.5))
    run = evolve(AgentState(1.0), coeffs, SimulationPlan(seed=5, burn_in=t - 1, samples=1))
    drift = t * (math.log(0.5) + LOG_ONE_PLUS_EPS)
    sd = math.sqrt(t * 0.0391)
    assert run.m[0] == 0.0
    assert math.isfinite(run.log_m[0])
    assert abs(run.log_m[0] - drift) < 5 * sd + 5


@pytest.mark.parametrize(
    "coeffs",
    [
        make_coefficients(Regime("SKEWED_INDEPENDENT", 0.3)),
        make_coefficients(Regime("SKEWED_COUPLED", 0.6)),
        make_coefficients(Regime("POWER_LAW", 0.2, -20)),
        make_coefficients(Regime("OPINION", 0.7)),
        make_coefficients(Regime("OPINION", 0.55)),
        make_coefficients(Regime("GIBRAT"), eps_max=0.1),
    ],
)
def test_kernel_replays_python_step(coeffs):
    """Compiled chunked path equals a draw-by-draw replay through step()."""
    plan = SimulationPlan(seed=21, burn_in=7, samples=40, stride=3)
    run = evolve(AgentState(1.0), coeffs, plan)
    gen = agent_stream(21, 0, 0)
    state = AgentState(1.0)
    got_m, got_log = [], []
    for t in range(1, plan.total_steps + 1):
        state = step(state, coeffs, next_noise(gen, coeffs))
        if t > plan.burn_in and (t - plan.burn_in) % plan.stride == 0:
            got_m.append(state.m)
            got_log.append(state.log_m)
    np.testing.assert_array_equal(run.m, got_m)
    np.testing.assert_array_equal(run.log_m, got_log)


def test_determinism_bit_identical():
    coeffs = make_coefficients(Regime("POWER_LAW", 0.4, 0))
    plan = SimulationPlan(seed=99, burn_in=100, samples=5000, replicas=3)
    a = evolve_ensemble(AgentState(1.0), coeffs, plan)
    b = evolve_ensemble(AgentState(1.0), coeffs, plan, threads=3)
    assert a.m.tobytes() == b.m.tobytes()
    c = evolve_ensemble(AgentState(1.0), coeffs, SimulationPlan(seed=100, burn_in=100, samples=5000, replicas=3))
    assert a.m.tobytes() != c.m.tobytes()


def test_chunk_boundaries_do_not_change_output():
    coeffs = make_coefficients(Regime("SKEWED_INDEPENDENT", 0.2))
    long = evolve(AgentState(1.0), coeffs, SimulationPlan(seed=4, burn_in=0, samples=200_000))
    gen = agent_stream(4, 0, 0)
    short = simulate(AgentState(1.0), coeffs, gen, [70_000, 200_000])
    assert short.m[0] == long.m[69_999]
    assert short.m[1] == long.m[-1]


def test_opinion_samples_bounded():
    coeffs = make_coefficients(Regime("OPINION", 0.8))
    run = evolve_ensemble(AgentState(1.0), coeffs, SimulationPlan(seed=1, burn_in=0, samples=20_000, replicas=4))
    assert np.all(run.m >= 0.0)
    assert np.all(run.m <= 1.0)


def test_contraction_in_expectation():
    coeffs = MapCoefficients(0.5, 0.5, 0.0)
    plan = SimulationPlan(seed=8, replicas=500)
    run = evolve_ensemble(AgentState(1.0), coeffs, plan, record_steps=[100, 1000])
    m100, m1000 = run.m[:, 0], run.m[:, 1]
    se = math.sqrt(np.var(m100, ddof=1) / m100.size + np.var(m1000, ddof=1) / m1000.size)
    assert m1000.mean() <= m100.mean() + 3 * se


@pytest.mark.parametrize(
    "coeffs",
    [make_coefficients(Regime("GIBRAT"), eps_max=0.1), make_coefficients(Regime("OPINION", 0.75))],
)
def test_log_shadow_agrees_with_direct_space(coeffs):
    run = evolve(AgentState(1.0), coeffs, SimulationPlan(seed=2, burn_in=0, samples=3000))
    live = run.m > 1e-300
    np.testing.assert_allclose(np.exp(run.log_m[live]), run.m[live], rtol=1e-10)


def test_substreams_uncorrelated():
    a = agent_stream(123, 0, 0).random(100_000)
    b = agent_stream(123, 1, 0).random(100_000)
    c = agent_stream(123, 0, 1).random(100_000)
    for other in (b, c):
        for lag in range(6):
            r = np.corrcoef(a[lag:], other[: other.size - lag])[0, 1]
            assert abs(r) < 0.01


def test_population_of_one_equals_evolve():
    coeffs = make_coefficients(Regime("POWER_LAW", 0.3, 0))
    plan = SimulationPlan(seed=6, burn_in=50, samples=1000)
    pop = evolve_population([AgentState(1.0, lam=0.3)], [coeffs], plan)
    single = evolve(AgentState(1.0, lam=0.3), coeffs, plan)
    assert pop.m.shape == (1, 1, 1000)
    np.testing.assert_array_equal(pop.m[0, 0], single.m)


def test_two_agents_same_lambda_independent_equal_means():
    coeffs = make_coefficients(Regime("SKEWED_INDEPENDENT", 0.4))
    plan = SimulationPlan(seed=12, burn_in=1000, samples=20_000, stride=10)
    run = evolve_population([AgentState(1.0, lam=0.4)] * 2, coeffs, plan)
    x, y = run.m[0, 0], run.m[1, 0]
    assert not np.array_equal(x, y)
    se = math.sqrt(np.var(x, ddof=1) / x.size + np.var(y, ddof=1) / y.size)
    assert abs(x.mean() - y.mean()) < 3 * se
    assert abs(np.corrcoef(x, y)[0, 1]) < 0.05


@settings(max_examples=40, deadline=None)
@given(
    m=st.floats(0, 1),
    lam=st.floats(0, 0.99),
    eps=st.floats(0, 1, exclude_max=True),
)
def test_step_opinion_stays_in_unit_interval(m, lam, eps):
    out = step(AgentState(m), make_coefficients(Regime("OPINION", lam)), NoiseDraw(eps, 0.0))
    assert 0.0 <= out.m <= 1.0
    assert out.log_m <= 0.0


@settings(max_examples=40, deadline=None)
@given(
    m=st.floats(0, 1e6),
    lam=st.floats(0, 1),
    eps=st.floats(0, 1, exclude_max=True),
    xi=st.floats(0, 1, exclude_max=True),
)
def test_step_skewed_formula(m, lam, eps, xi):
    coeffs = make_coefficients(Regime("SKEWED_INDEPENDENT", lam))
    out = step(AgentState(m), coeffs, NoiseDraw(eps, xi))
    assert out.m == (lam + eps * (1 - lam)) * m + xi * (1 - lam) ** 1.0
    assert out.m >= 0.0
