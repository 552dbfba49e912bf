import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import integrate

from fracspde.errors import DomainError
from fracspde.frac_calculus import FracOrders, TimeGrid
from fracspde.spectral_kernels import (FourierField, KernelKind, KernelTable, SpatialGrid, kernel_field,
                                       kernel_symbol, product_weights)

P, Q, PBG = KernelKind.P_KERNEL, KernelKind.Q_KERNEL, KernelKind.PBG_KERNEL


def test_grid_validation_and_modes():
    g = SpatialGrid(2, 2 * np.pi, 8)
    assert g.shape == (8, 8) and g.size == 64
    assert g.volume == pytest.approx(4 * np.pi ** 2)
    lam, inv = g.levels
    np.testing.assert_allclose(lam[inv], g.lam)
    assert g.mode_index((-1, 3)) == (7, 3)
    with pytest.raises(DomainError):
        g.mode_index((4, 0))
    for bad in ((4, 1.0, 8), (1, -1.0, 8), (1, 1.0, 7), (1, 1.0, 2)):
        with pytest.raises(DomainError):
            SpatialGrid(*bad)


@given(seed=st.integers(0, 2 ** 32 - 1), d=st.sampled_from([1, 2]))
def test_parseval_and_round_trip(seed, d):
    g = SpatialGrid(d, 3.0, 8)
    v = np.random.default_rng(seed).standard_normal(g.shape)
    f = FourierField.from_values(g, v)
    assert f.is_hermitian()
    np.testing.assert_allclose(f.values().real, v, atol=1e-12)
    assert f.l2_norm() == pytest.approx(f.grid_l2_norm(), rel=1e-12)
    assert f.l2_norm() == pytest.approx(math.sqrt(g.cell_volume * np.sum(v * v)), rel=1e-12)


def test_single_and_cosine_modes():
    g = SpatialGrid(1, 2 * np.pi, 16)
    x = g.points()[0]
    c = FourierField.cosine_mode(g, (3,), 2.0)
    np.testing.assert_allclose(c.values().real, 2.0 * np.cos(3 * x), atol=1e-13)
    s = FourierField.single_mode(g, (2,))
    np.testing.assert_allclose(s.values(), np.exp(2j * x), atol=1e-13)
    assert not s.is_hermitian()
    assert s.l2_norm() == pytest.approx(math.sqrt(2 * np.pi))
    both = c + s.scaled(0.5)
    assert both.coefficients[g.mode_index((2,))] == pytest.approx(0.5)
    with pytest.raises(DomainError):
        c + FourierField.zeros(SpatialGrid(1, 2 * np.pi, 8))


def test_symbols_at_zero_frequency():
    o = FracOrders(0.7, 0.4)
    t = np.array([0.1, 0.5, 2.0])
    np.testing.assert_allclose(kernel_symbol(P, o, t, 0.0), 1.0)
    np.testing.assert_allclose(kernel_symbol(Q, o, t, 0.0), t ** (0.7 - 1) / math.gamma(0.7), rtol=1e-12)
    np.testing.assert_allclose(kernel_symbol(PBG, o, t, 0.0), t ** 0.3 / math.gamma(1.3), rtol=1e-12)


def test_noise_kernel_reduces_to_p_when_orders_coincide():
    o = FracOrders(0.6, 0.6)
    t = np.linspace(0.01, 1, 30)
    np.testing.assert_allclose(kernel_symbol(PBG, o, t, 3.0), kernel_symbol(P, o, t, 3.0), rtol=1e-12)


@pytest.mark.parametrize("lam", [0.5, 4.0, 30.0])
def test_time_derivative_of_p(lam):
    # d/dt p = -lam q
    o = FracOrders(0.7, 0.4)
    t = np.linspace(0.2, 1.0, 9)
    eps = 1e-4
    dp = (kernel_symbol(P, o, t + eps, lam, 1e-14) - kernel_symbol(P, o, t - eps, lam, 1e-14)) / (2 * eps)
    np.testing.assert_allclose(dp, -lam * kernel_symbol(Q, o, t, lam), rtol=1e-6)


def test_kernel_symbol_domain():
    with pytest.raises(DomainError):
        kernel_symbol(P, FracOrders(0.4, 0.95), 1.0, 1.0)
    with pytest.raises(DomainError):
        kernel_symbol(P, FracOrders(0.4, 0.5), 0.0, 1.0)
    with pytest.raises(DomainError):
        kernel_symbol(P, FracOrders(0.4, 0.5), 1.0, -1.0)


def test_kernel_field_is_a_radial_multiplier():
    g = SpatialGrid(2, 2 * np.pi, 8)
    o = FracOrders(0.8, 0.6)
    f = kernel_field(P, o, 0.3, g)
    assert f.is_hermitian()
    k = (1, 2)
    assert f.coefficients[g.mode_index(k)].real == pytest.approx(kernel_symbol(P, o, 0.3, 5.0))


def test_product_weights_exact_for_linear_data():
    # kernel K(t) = t^{-1/2}: K1 = 2 t^{1/2}, K2 = 4/3 t^{3/2}
    N, h = 20, 0.05
    t = np.arange(N + 2) * h
    c, e = product_weights(2 * t ** 0.5, 4.0 / 3.0 * t ** 1.5, h)
    phi = 1.0 + 3.0 * t[:N + 1]
    approx = np.array([np.dot(c[:n + 1][::-1], phi[:n + 1]) + e[n] * phi[0] for n in range(N + 1)])
    tn = t[:N + 1]
    exact = 2 * tn ** 0.5 + 3.0 * (4.0 / 3.0) * tn ** 1.5  # int (1 + 3s)(t-s)^{-1/2} ds
    # row 0 is not a quadrature (the solver sets the value at t = 0 directly)
    np.testing.assert_allclose(approx[1:], exact[1:], atol=1e-12)


@pytest.mark.parametrize("orders", [FracOrders(0.6, 0.9), FracOrders(0.8, 0.6), FracOrders(0.7, 0.3)])
def test_rms_weights_reproduce_the_ito_variance(orders):
    tg = TimeGrid(1.0, 64)
    lams = [0.0, 1.0, 100.0, 1e4]
    kt = KernelTable(orders, tg, lams)
    a = 2 * (orders.beta - orders.gamma)
    for j, lam in enumerate(lams):
        ref = integrate.quad(lambda s: (kernel_symbol(PBG, orders, s, lam) ** 2 / s ** a) if s > 0 else 0.0,
                             0, 1, weight="alg", wvar=(a, 0), limit=400, epsabs=0, epsrel=1e-12)[0]
        assert np.sum(kt.stoch[:, j] ** 2) * tg.h == pytest.approx(ref, rel=1e-8)


def test_left_rule_is_the_point_value():
    o = FracOrders(0.8, 0.6)
    tg = TimeGrid(1.0, 16)
    kt = KernelTable(o, tg, [2.0], stochastic_rule="left")
    np.testing.assert_allclose(kt.stoch[1:, 0], kernel_symbol(PBG, o, tg.nodes[1:], 2.0), rtol=1e-12)
    assert KernelTable(o, tg, [2.0], with_stochastic=False).stoch is None
    with pytest.raises(DomainError):
        KernelTable(o, tg, [2.0], stochastic_rule="midpoint")


def test_table_symbols_match_direct_evaluation():
    o = FracOrders(0.7, 0.5)
    tg = TimeGrid(1.0, 10)
    kt = KernelTable(o, tg, [0.0, 3.0])
    t, p, q, Pv = kt.symbols_at_nodes()
    np.testing.assert_allclose(p[:, 1], kernel_symbol(P, o, t, 3.0), rtol=1e-12)
    np.testing.assert_allclose(q[:, 1], kernel_symbol(Q, o, t, 3.0), rtol=1e-12)
    np.testing.assert_allclose(Pv[:, 0], kernel_symbol(PBG, o, t, 0.0), rtol=1e-12)
    with pytest.raises(ValueError):
        kt.p[0, 0] = 2.0
