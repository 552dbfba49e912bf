import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import special

from fracspde.errors import DomainError, ResourceError
from fracspde.frac_calculus import FracOrders, TimeGrid
from fracspde.noise import (NoiseBasis, NoiseRealization, NoiseSpec, ito_isometry_oracle, left_endpoint_weights,
                            sample_wiener, stochastic_convolution, white_noise_basis, white_noise_coefficients)
from fracspde.spectral_kernels import FourierField, KernelKind, KernelTable, SpatialGrid, kernel_symbol


def test_spec_validation():
    assert NoiseSpec(2, "spacetime_white").basis is NoiseBasis.SPACETIME_WHITE
    for bad in (0, 1.5, -3):
        with pytest.raises(DomainError):
            NoiseSpec(bad)
    with pytest.raises(DomainError):
        NoiseSpec(1, seed=-1)


def test_increment_statistics():
    g = TimeGrid(1.0, 10_000)
    r = sample_wiener(NoiseSpec(3, seed=5), g)
    assert r.increments.shape == (3, g.N)
    var = r.increments.var(axis=1) / g.h
    assert np.all(np.abs(var - 1.0) < 5 * math.sqrt(2.0 / g.N))
    corr = np.corrcoef(r.increments)
    assert np.all(np.abs(corr[np.triu_indices(3, 1)]) < 4 / math.sqrt(g.N))
    paths = r.paths()
    assert np.all(paths[:, 0] == 0) and np.allclose(paths[:, -1], r.increments.sum(axis=1))


@given(seed=st.integers(0, 2 ** 63), sample=st.integers(0, 10 ** 6))
def test_substreams_are_reproducible_and_independent_of_K(seed, sample):
    g = TimeGrid(1.0, 16)
    a = sample_wiener(NoiseSpec(2, seed=seed), g, sample)
    b = sample_wiener(NoiseSpec(5, seed=seed), g, sample)
    # process k of a sample does not depend on how many processes are drawn
    np.testing.assert_array_equal(a.increments, b.increments[:2])
    c = sample_wiener(NoiseSpec(2, seed=seed), g, sample + 1)
    assert not np.array_equal(a.increments, c.increments)


def test_memory_budget():
    with pytest.raises(ResourceError):
        sample_wiener(NoiseSpec(10, memory_budget=100), TimeGrid(1.0, 100))


def test_realization_shape_check():
    g = TimeGrid(1.0, 4)
    with pytest.raises(DomainError):
        NoiseRealization(NoiseSpec(1), g, np.zeros((1, 5)))


@pytest.mark.parametrize("d", [1, 2])
def test_white_noise_basis_is_complete_and_orthonormal(d):
    grid = SpatialGrid(d, 2.0, 8)
    eta = white_noise_basis(grid)
    assert eta.shape == (grid.size,) + grid.shape
    flat = eta.reshape(grid.size, -1)
    gram = flat @ flat.T * grid.cell_volume
    assert np.max(np.abs(gram - np.eye(grid.size))) < 1e-12
    # sum_k eta_k(x)^2 = n^d / L^d at every point
    np.testing.assert_allclose(np.sum(eta ** 2, axis=0), grid.size / grid.volume, rtol=1e-12)


def test_white_noise_basis_orders_by_frequency():
    grid = SpatialGrid(1, 2 * np.pi, 8)
    eta = white_noise_basis(grid, 3)
    x = grid.points()[0]
    np.testing.assert_allclose(eta[0], 1 / math.sqrt(2 * np.pi))
    np.testing.assert_allclose(eta[1], math.sqrt(1 / np.pi) * np.cos(x), atol=1e-14)
    with pytest.raises(DomainError):
        white_noise_basis(grid, 9)


def test_white_noise_coefficients():
    grid = SpatialGrid(1, 2 * np.pi, 8)
    h = FourierField.from_values(grid, 2.0 + np.cos(grid.points()[0]))
    fam = white_noise_coefficients(NoiseSpec(4, NoiseBasis.SPACETIME_WHITE), grid, h)
    assert len(fam) == 4
    np.testing.assert_allclose(fam[1].values().real, h.values().real * white_noise_basis(grid, 2)[1], atol=1e-13)
    with pytest.raises(DomainError):
        white_noise_coefficients(NoiseSpec(4), grid, h)


def test_oracle_closed_forms():
    b, g = 0.8, 0.6
    val = ito_isometry_oracle(lambda s: s ** (b - g) / special.gamma(1 + b - g), 1.0)
    assert val == pytest.approx(1 / ((2 * (b - g) + 1) * special.gamma(1 + b - g) ** 2), rel=1e-12)
    assert ito_isometry_oracle(lambda s: 1.0, 2.5) == pytest.approx(2.5, rel=1e-14)
    # singular kernel s^{-0.3}: int_0^1 s^{-0.6} ds = 1/0.4
    assert ito_isometry_oracle(lambda s: s ** -0.3, 1.0, singular_exponent=-0.3) == pytest.approx(2.5, rel=1e-10)
    with pytest.raises(DomainError):
        ito_isometry_oracle(lambda s: s ** -0.6, 1.0, singular_exponent=-0.6)


@pytest.mark.parametrize("lam", [0.0, 1.0, 100.0])
def test_rms_weights_are_exact_and_left_rule_is_biased(lam):
    o = FracOrders(0.6, 0.9)
    tg = TimeGrid(1.0, 64)
    ex = ito_isometry_oracle(lambda s: kernel_symbol(KernelKind.PBG_KERNEL, o, s, lam), 1.0, tg)
    rms = KernelTable(o, tg, [lam]).stoch[:, 0]
    left = KernelTable(o, tg, [lam], stochastic_rule="left").stoch[:, 0]
    assert np.sum(rms ** 2) * tg.h == pytest.approx(ex, rel=1e-9)
    assert abs(np.sum(left ** 2) * tg.h / ex - 1) > 0.05


def test_left_endpoint_weights():
    tg = TimeGrid(1.0, 4)
    w = left_endpoint_weights(lambda s: 2 * s, tg)
    np.testing.assert_allclose(w, [0, 0.5, 1.0, 1.5, 2.0])


@given(seed=st.integers(0, 1000), N=st.integers(2, 200))
def test_stochastic_convolution_matches_direct_sum(seed, N):
    rng = np.random.default_rng(seed)
    w = rng.standard_normal(N + 1)
    xi = rng.standard_normal(N)
    out = stochastic_convolution(w, xi)
    direct = np.array([sum(w[n - j] * xi[j] for j in range(n)) for n in range(N + 1)])
    np.testing.assert_allclose(out, direct, atol=1e-10)


def test_stochastic_convolution_broadcasts_over_columns():
    rng = np.random.default_rng(1)
    w = rng.standard_normal((11, 3))
    xi = rng.standard_normal((10, 3))
    out = stochastic_convolution(w, xi)
    for j in range(3):
        np.testing.assert_allclose(out[:, j], stochastic_convolution(w[:, j], xi[:, j]), atol=1e-12)
    with pytest.raises(DomainError):
        stochastic_convolution(np.ones(5), np.ones(5))
