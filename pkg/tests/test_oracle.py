import math

import pytest
from hypothesis import given, strategies as st

from stochmap import oracle
from stochmap.oracle import (
    critical_lambda,
    mean_power,
    stationary_mean_skewed,
    stationary_variance_coupled,
    stationary_variance_independent,
    tail_exponent,
)


def test_stationary_mean():
    assert stationary_mean_skewed() == 1.0


def test_variance_independent_values():
    assert stationary_variance_independent(0.0) == 0.25
    assert stationary_variance_independent(0.4) == pytest.approx(0.125)
    assert stationary_variance_independent(1.0) == 0.0


def test_variance_coupled_values():
    assert stationary_variance_coupled(0.0) == 0.5
    assert stationary_variance_coupled(0.7) == pytest.approx(0.3 / 2.7)
    assert stationary_variance_coupled(1.0) == 0.0


def test_variance_from_second_moment_recursion():
    # E[m'^2] = E[m^2] at stationarity, solved by brute-force fixed-point iteration
    for lam in (0.0, 0.2, 0.7):
        a1, a2 = lam + 0.5 * (1 - lam), lam**2 + lam * (1 - lam) + (1 - lam) ** 2 / 3
        v_ind = v_cpl = 0.0
        for _ in range(2000):
            m2 = v_ind + 1
            v_ind = a2 * m2 + 2 * a1 * 0.5 * (1 - lam) + (1 - lam) ** 2 / 3 - 1
            m2 = v_cpl + 1
            # coupled: (lam m + eps (1-lam)(m+1))^2
            v_cpl = lam**2 * m2 + 2 * lam * (1 - lam) * 0.5 * (m2 + 1) + (1 - lam) ** 2 / 3 * (m2 + 2 + 1) - 1
        assert v_ind == pytest.approx(stationary_variance_independent(lam), rel=1e-9)
        assert v_cpl == pytest.approx(stationary_variance_coupled(lam), rel=1e-9)


@given(st.floats(0, 1))
def test_independent_is_half_coupled(lam):
    assert stationary_variance_independent(lam) == stationary_variance_coupled(lam) / 2


def test_mean_power():
    assert mean_power(0.5, -20) == 2.0**21
    assert mean_power(0.5, 0) == 2.0
    assert mean_power(0.0, -37) == 1.0
    with pytest.raises(ValueError):
        mean_power(1 - 1e-12, -100)


@given(st.floats(0, 1))
def test_mean_power_unit_at_n_one(lam):
    assert mean_power(lam, 1) == 1.0


def test_tail_exponent():
    assert tail_exponent(0) == 2.0
    assert tail_exponent(-20) == pytest.approx(22 / 21)
    assert tail_exponent(-math.inf) == 1.0
    with pytest.raises(ValueError):
        tail_exponent(1)


@given(st.floats(-1e6, 0), st.floats(-1e6, 0))
def test_tail_exponent_monotone_and_bounded(a, b):
    lo, hi = sorted((a, b))
    assert 1.0 < tail_exponent(hi) <= 2.0
    if hi - lo > 1e-6 * max(1.0, abs(lo)):
        assert tail_exponent(lo) < tail_exponent(hi)


def test_critical_lambda():
    lc = critical_lambda()
    assert lc == pytest.approx(math.e / 4, abs=1e-15)
    assert lc == pytest.approx(0.679570, abs=1e-6)
    assert 2 / 3 < lc < 0.68
    assert abs(lc - 0.67954) < 5e-4


def test_critical_lambda_by_quadrature():
    from scipy.integrate import quad

    mean_log, _ = quad(lambda e: math.log1p(e), 0, 1)
    assert math.exp(-mean_log) == pytest.approx(critical_lambda(), rel=1e-12)


def test_registry():
    v = oracle.evaluate("variance_independent", 0)
    assert v.value == 0.25 and v.source
    with pytest.raises(KeyError):
        oracle.evaluate("nope")
    with pytest.raises(ValueError):
        oracle.evaluate("critical_lambda", 1.0)
