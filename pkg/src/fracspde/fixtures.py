"""Fixed problem families used by the verification suites and the CLI.

Every family is generated from a recorded seed, so a spread or bound check
run twice sees exactly the same data.
"""

from __future__ import annotations

import numpy as np

from .frac_calculus import FracOrders, SampledPath, TimeGrid
from .mild_solver import CoefficientSet, ModelProblem, Nonlinearity, QuasilinearProblem
from .noise import NoiseSpec
from .spectral_kernels import FourierField, SpatialGrid

__all__ = [
    "RATIO_FAMILY_SEED",
    "RATIO_SPREAD_BOUND",
    "GRONWALL_SEED",
    "ratio_family",
    "picard_fixture",
    "gronwall_fixtures",
]

RATIO_FAMILY_SEED = 20240601
RATIO_SPREAD_BOUND = 10.0
GRONWALL_SEED = 5


def _mode_field(grid: SpatialGrid, rng: np.random.Generator, max_mode: int = 4) -> FourierField:
    """Real field built from one or two random cosine/sine modes."""
    x = grid.points()
    vals = np.zeros(grid.shape)
    for _ in range(int(rng.integers(1, 3))):
        k = rng.integers(-max_mode, max_mode + 1, size=grid.d)
        if not np.any(k):
            k[0] = 1
        phase = sum(ki * xi for ki, xi in zip(k, x)) * (2.0 * np.pi / grid.L)
        vals += rng.uniform(0.5, 2.0) * np.cos(phase + rng.uniform(0.0, 2.0 * np.pi))
    return FourierField.from_values(grid, vals)


def ratio_family(orders: FracOrders | None = None, count: int = 20, n: int = 16, N: int = 64,
                 T: float = 1.0, seed: int = RATIO_FAMILY_SEED) -> list:
    """``count`` model problems with single- or two-mode ``u0``, ``f`` and ``g``.

    Each problem has its own noise seed. The defaults are the family of the
    boundedness check at :math:`(\\beta, \\gamma) = (0.8, 0.6)`.
    """
    orders = FracOrders(0.8, 0.6) if orders is None else orders
    grid = SpatialGrid(1, 2.0 * np.pi, n)
    tg = TimeGrid(T, N)
    rng = np.random.default_rng(seed)
    out = []
    for i in range(count):
        u0 = _mode_field(grid, rng)
        f = _mode_field(grid, rng)
        g = [_mode_field(grid, rng)]
        out.append(ModelProblem(orders, grid, tg, u0, f=f, g=g, noise=NoiseSpec(1, seed=seed + i + 1)))
    return out


def picard_fixture(N: int = 256, n: int = 16, seed: int = 11) -> QuasilinearProblem:
    r"""Quasi-linear fixture of the contraction check.

    Near-identity :math:`a = 1 + 0.1\cos x`, drift :math:`b = 0.1\sin x`,
    :math:`c = 0.1`, small :math:`\sigma = 0.05\cos x` and :math:`\nu = 0.2`,
    the Lipschitz forcing :math:`0.2\sin u`, one noise with coefficient
    :math:`0.3 + 0.1u`, at :math:`(\beta, \gamma) = (0.6, 0.4)`.
    """
    orders = FracOrders(0.6, 0.4)
    grid = SpatialGrid(1, 2.0 * np.pi, n)
    x = grid.points()[0]
    tg = TimeGrid(1.0, N)
    coeffs = CoefficientSet(grid, a=[[1 + 0.1 * np.cos(x)]], b=[0.1 * np.sin(x)], c=0.1,
                            sigma=[[[0.05 * np.cos(x)]]], nu=[0.2], delta=0.5, K1=5)
    base = ModelProblem(orders, grid, tg, FourierField.from_values(grid, np.sin(x) + 0.5),
                        f=FourierField.single_mode(grid, (0,), 0.2),
                        g=[FourierField.from_values(grid, np.full(grid.shape, 0.3))],
                        noise=NoiseSpec(1, seed=seed))
    return QuasilinearProblem(base, coeffs, f_nl=Nonlinearity("sin", 0.2),
                              g_nl=(Nonlinearity("linear", 0.1),))


def gronwall_fixtures(count: int = 10, N: int = 2048, T: float = 1.0, seed: int = GRONWALL_SEED) -> list:
    """``(a, b, beta)`` triples cycling through constant, power and mixed data ``a``."""
    rng = np.random.default_rng(seed)
    tg = TimeGrid(T, N)
    t = tg.nodes
    out = []
    for i in range(count):
        beta = float(rng.uniform(0.2, 1.0))
        b = float(rng.uniform(0.1, 3.0))
        kind = i % 3
        if kind == 0:
            a = SampledPath(tg, np.full(t.shape, rng.uniform(0.5, 2.0)))
        elif kind == 1:
            p = float(rng.uniform(0.2, 1.5))
            a = SampledPath(tg, rng.uniform(0.1, 1.0) + t ** p, (p,))
        else:
            a = SampledPath(tg, 1.0 + np.sqrt(t) + t ** 2, (0.5,))
        out.append((a, b, beta))
    return out
