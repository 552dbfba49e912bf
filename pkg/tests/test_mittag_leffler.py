import math

import mpmath
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import special

from fracspde.errors import AccuracyError, DomainError
from fracspde.mittag_leffler import (ASYMPTOTIC_SWITCH, Z_MIN, MLParams, ml, ml_asymptotic_check,
                                     mittag_leffler, regime_of)


def mp_ml(beta, gamma_ml, z):
    """Power series in high precision; the digits grow with the cancellation."""
    dps = int(40 + abs(z) ** (1.0 / beta) / 2.3)
    with mpmath.workdps(dps):
        z = mpmath.mpf(z)
        total, k = mpmath.mpf(0), 0
        tol = mpmath.mpf(10) ** (-dps + 5)
        while True:
            term = z ** k / mpmath.gamma(mpmath.mpf(beta) * k + mpmath.mpf(gamma_ml))
            total += term
            if k > 10 and abs(term) < tol:
                return float(total)
            k += 1


@pytest.mark.parametrize("beta,gamma_ml", [(0.6, 0.9), (0.8, 1.8), (0.5, 0.5), (0.999, 1.0), (0.75, 0.2)])
def test_against_high_precision_series(beta, gamma_ml):
    z = np.array([-45.0, -20.0, -4.9, -0.7, 0.3, 2.0, 4.9])
    ref = np.array([mp_ml(beta, gamma_ml, x) for x in z])
    got = mittag_leffler(beta, gamma_ml, z, 1e-12)
    assert np.all(np.abs(got - ref) <= 1e-10 * np.maximum(1.0, np.abs(ref)))


def test_closed_forms():
    z = np.linspace(-30.0, 5.0, 71)
    assert np.allclose(mittag_leffler(1.0, 1.0, z, 1e-12), np.exp(z), rtol=1e-12, atol=1e-12)
    t = np.linspace(0.0, 6.0, 25)
    assert np.allclose(mittag_leffler(0.5, 1.0, -t, 1e-12), special.erfcx(t), rtol=0, atol=1e-12)
    # E_{1,2}(z) = (e^z - 1)/z
    zz = np.array([-8.0, -1.0, 0.5, 3.0])
    assert np.allclose(mittag_leffler(1.0, 2.0, zz, 1e-12), np.expm1(zz) / zz, rtol=1e-11)


@given(beta=st.floats(0.2, 1.0), gamma_ml=st.floats(0.3, 2.0), z=st.floats(-25.0, 2.0))
def test_recurrence(beta, gamma_ml, z):
    lhs = mittag_leffler(beta, gamma_ml, z, 1e-12)
    rhs = 1.0 / math.gamma(gamma_ml) + z * mittag_leffler(beta, gamma_ml + beta, z, 1e-12)
    assert abs(lhs - rhs) <= 1e-8 * max(1.0, abs(lhs), abs(z * lhs))


@given(beta=st.floats(0.3, 0.95), z=st.floats(-40.0, -0.01))
def test_complete_monotonicity_on_negative_axis(beta, z):
    # E_beta(-x) is positive and decreasing for 0 < beta <= 1
    a = mittag_leffler(beta, 1.0, z, 1e-12)
    b = mittag_leffler(beta, 1.0, z * 1.01, 1e-12)
    assert 0.0 < b <= a <= 1.0


def test_regimes_agree_where_they_overlap():
    z = np.array([-9.0, -15.0])
    c = mittag_leffler(0.6, 0.9, z, 1e-12, regime="contour")
    a = mittag_leffler(0.6, 0.9, z, 1e-10, regime="asymptotic")
    assert np.allclose(c, a, rtol=1e-8)
    near = np.array([-1.0, 0.5])
    assert np.allclose(mittag_leffler(0.6, 0.9, near, 1e-12, regime="series"),
                       mittag_leffler(0.6, 0.9, near, 1e-12, regime="contour"), rtol=1e-11)
    # across the switch the value is continuous
    left = mittag_leffler(0.7, 1.0, ASYMPTOTIC_SWITCH * (1 + 1e-9), 1e-12)
    right = mittag_leffler(0.7, 1.0, ASYMPTOTIC_SWITCH * (1 - 1e-9), 1e-12)
    assert abs(left - right) <= 1e-10


def test_regime_report():
    r = regime_of(0.6, 0.9, np.array([-100.0, -5.0, 0.5]))
    assert list(r) == ["asymptotic", "contour", "series"]


def test_forced_series_refuses_far_arguments():
    with pytest.raises(AccuracyError):
        mittag_leffler(0.6, 0.9, np.array([-9.0]), 1e-10, regime="series")


@pytest.mark.parametrize("beta,gamma_ml", [(0.0, 1.0), (1.2, 1.0), (0.5, 0.0), (0.5, -1.0)])
def test_parameter_domain(beta, gamma_ml):
    with pytest.raises(DomainError):
        mittag_leffler(beta, gamma_ml, 0.0)


def test_argument_domain():
    with pytest.raises(DomainError):
        mittag_leffler(0.5, 1.0, 2 * Z_MIN)


def test_scalar_in_scalar_out():
    assert isinstance(mittag_leffler(0.6, 0.9, -1.0), float)
    assert mittag_leffler(0.6, 0.9, [-1.0, 2.0]).shape == (2,)
    assert ml(MLParams(0.6, 0.9), 0.0) == pytest.approx(1.0 / math.gamma(0.9), rel=1e-14)


def test_asymptotic_check():
    for p in ((0.6, 0.9), (0.8, 1.0), (0.4, 0.7)):
        assert abs(ml_asymptotic_check(MLParams(*p, accuracy_target=1e-12), 1e6) - 1.0) < 1e-3
    with pytest.raises(DomainError):
        ml_asymptotic_check(MLParams(0.6, 0.6), 1e6)
    with pytest.raises(DomainError):
        ml_asymptotic_check(MLParams(0.6, 0.9), 10.0)
