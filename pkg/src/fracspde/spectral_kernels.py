r"""Fundamental-solution symbols on the periodic torus.

For a Fourier mode with :math:`\lambda = |\xi|^2` the three kernels of the
model equation :math:`\partial_t^\beta u = \Delta u + f + \partial_t^\gamma\int g\,dW`
act as multipliers

.. math::

    \hat p(t,\lambda) = E_\beta(-\lambda t^\beta), \qquad
    \hat q(t,\lambda) = t^{\beta-1}E_{\beta,\beta}(-\lambda t^\beta), \qquad
    \hat P(t,\lambda) = t^{\beta-\gamma}E_{\beta,1+\beta-\gamma}(-\lambda t^\beta).

The torus :math:`[0, L)^d` replaces :math:`\mathbb{R}^d`; a field is stored by
its coefficients :math:`c_\xi` in :math:`u(x) = \sum_\xi c_\xi e^{i\xi\cdot x}`,
in FFT index order along each axis.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy import special

from .errors import DomainError
from .frac_calculus import FracOrders, TimeGrid
from .mittag_leffler import mittag_leffler

__all__ = [
    "SpatialGrid",
    "FourierField",
    "KernelKind",
    "kernel_symbol",
    "kernel_field",
    "KernelTable",
    "product_weights",
]


@dataclass(frozen=True)
class SpatialGrid:
    """``n**d`` equispaced points on the torus of side ``L``."""

    d: int
    L: float
    n: int

    def __post_init__(self):
        if self.d not in (1, 2, 3):
            raise DomainError(f"dimension must be 1, 2 or 3, got {self.d}")
        if not (self.L > 0 and math.isfinite(self.L)):
            raise DomainError(f"side length must be positive, got {self.L}")
        if int(self.n) != self.n or self.n < 4 or self.n % 2:
            raise DomainError(f"points per dimension must be even and >= 4, got {self.n}")

    @property
    def shape(self) -> tuple:
        return (self.n,) * self.d

    @property
    def size(self) -> int:
        return self.n ** self.d

    @property
    def volume(self) -> float:
        return self.L ** self.d

    @property
    def cell_volume(self) -> float:
        return (self.L / self.n) ** self.d

    @cached_property
    def integer_modes(self) -> tuple:
        """Integer wave vectors per axis, in FFT order, broadcast to :attr:`shape`."""
        k = np.fft.fftfreq(self.n, d=1.0 / self.n).astype(int)
        return tuple(np.meshgrid(*([k] * self.d), indexing="ij"))

    @cached_property
    def wavenumbers(self) -> tuple:
        scale = 2.0 * np.pi / self.L
        return tuple(scale * k for k in self.integer_modes)

    @cached_property
    def lam(self) -> np.ndarray:
        """:math:`|\\xi|^2` on the mode array."""
        return sum(x * x for x in self.wavenumbers)

    @cached_property
    def levels(self) -> tuple:
        """Distinct values of :math:`|\\xi|^2` and the level index of every mode.

        The integer :math:`|k|^2` identifies the level exactly, so the
        grouping is free of rounding.
        """
        k2 = sum(k * k for k in self.integer_modes)
        uniq, inv = np.unique(k2.ravel(), return_inverse=True)
        lam = uniq * (2.0 * np.pi / self.L) ** 2
        return lam, inv.reshape(self.shape)

    def points(self) -> tuple:
        x = np.arange(self.n) * (self.L / self.n)
        return tuple(np.meshgrid(*([x] * self.d), indexing="ij"))

    def mode_index(self, k) -> tuple:
        """Array index of the integer wave vector ``k`` (one entry per axis)."""
        k = tuple(int(v) for v in np.atleast_1d(k))
        if len(k) != self.d:
            raise DomainError(f"wave vector needs {self.d} components, got {k}")
        for v in k:
            if not (-self.n // 2 <= v < self.n // 2):
                raise DomainError(f"mode {k} is not resolved on an {self.n}-point grid")
        return tuple(v % self.n for v in k)

    def negate_index(self) -> tuple:
        """Index arrays mapping each mode to the mode of :math:`-\\xi`."""
        idx = (-np.arange(self.n)) % self.n
        return np.ix_(*([idx] * self.d))


@dataclass(frozen=True)
class FourierField:
    """Complex Fourier coefficients of a field on a :class:`SpatialGrid`."""

    grid: SpatialGrid
    coefficients: np.ndarray

    def __post_init__(self):
        c = np.array(self.coefficients, dtype=complex, copy=True)
        if c.shape != self.grid.shape:
            raise DomainError(f"coefficient shape {c.shape} does not match {self.grid.shape}")
        if not np.all(np.isfinite(c)):
            raise DomainError("coefficients must be finite")
        c.flags.writeable = False
        object.__setattr__(self, "coefficients", c)

    @classmethod
    def zeros(cls, grid: SpatialGrid) -> "FourierField":
        return cls(grid, np.zeros(grid.shape, dtype=complex))

    @classmethod
    def from_values(cls, grid: SpatialGrid, values) -> "FourierField":
        values = np.asarray(values)
        if values.shape != grid.shape:
            raise DomainError(f"grid values must have shape {grid.shape}")
        return cls(grid, np.fft.fftn(values) / grid.size)

    @classmethod
    def single_mode(cls, grid: SpatialGrid, k, amplitude: complex = 1.0) -> "FourierField":
        c = np.zeros(grid.shape, dtype=complex)
        c[grid.mode_index(k)] = amplitude
        return cls(grid, c)

    @classmethod
    def cosine_mode(cls, grid: SpatialGrid, k, amplitude: float = 1.0) -> "FourierField":
        """The real field :math:`A\\cos(\\xi\\cdot x)`."""
        c = np.zeros(grid.shape, dtype=complex)
        c[grid.mode_index(k)] += 0.5 * amplitude
        c[grid.mode_index(-np.atleast_1d(k))] += 0.5 * amplitude
        return cls(grid, c)

    def values(self) -> np.ndarray:
        """Grid values (complex); take ``.real`` for Hermitian fields."""
        return np.fft.ifftn(self.coefficients) * self.grid.size

    def is_hermitian(self, tol: float = 1e-12) -> bool:
        c = self.coefficients
        mirror = np.conj(c[self.grid.negate_index()])
        return bool(np.max(np.abs(c - mirror), initial=0.0) <= tol * max(1.0, np.max(np.abs(c), initial=0.0)))

    def l2_norm(self) -> float:
        """:math:`\\|u\\|_{L_2}` on the torus, :math:`L^d\\sum|c_\\xi|^2` squared."""
        return float(math.sqrt(self.grid.volume * np.sum(np.abs(self.coefficients) ** 2)))

    def grid_l2_norm(self) -> float:
        """The same norm by the rectangle rule on grid values (Parseval check)."""
        v = self.values()
        return float(math.sqrt(self.grid.cell_volume * np.sum(np.abs(v) ** 2)))

    def scaled(self, a: complex) -> "FourierField":
        return FourierField(self.grid, a * self.coefficients)

    def __add__(self, other: "FourierField") -> "FourierField":
        if other.grid != self.grid:
            raise DomainError("fields live on different grids")
        return FourierField(self.grid, self.coefficients + other.coefficients)


class KernelKind(enum.Enum):
    P_KERNEL = "p"
    Q_KERNEL = "q"
    PBG_KERNEL = "P_{β,γ}"


def _check_orders(orders: FracOrders) -> None:
    if not orders.satisfies_constraint:
        raise DomainError(
            f"orders (beta={orders.beta}, gamma={orders.gamma}) violate gamma < beta + 1/2"
        )


def kernel_symbol(kind: KernelKind, orders: FracOrders, t, lam, accuracy_target: float = 1e-10):
    """Multiplier of ``kind`` at time ``t > 0`` and :math:`\\lambda = |\\xi|^2 \\ge 0`.

    Vectorized over broadcastable ``t`` and ``lam``.
    """
    _check_orders(orders)
    kind = KernelKind(kind)
    t, lam = np.broadcast_arrays(np.asarray(t, dtype=float), np.asarray(lam, dtype=float))
    if np.any(t <= 0):
        raise DomainError("kernel symbols need t > 0")
    if np.any(lam < 0):
        raise DomainError("lambda must be nonnegative")
    b, g = orders.beta, orders.gamma
    z = -lam * t ** b
    if kind is KernelKind.P_KERNEL:
        out = mittag_leffler(b, 1.0, z, accuracy_target)
    elif kind is KernelKind.Q_KERNEL:
        out = t ** (b - 1.0) * mittag_leffler(b, b, z, accuracy_target)
    else:
        out = t ** (b - g) * mittag_leffler(b, 1.0 + b - g, z, accuracy_target)
    out = np.asarray(out, dtype=float)
    return float(out) if out.ndim == 0 else out


def kernel_field(kind: KernelKind, orders: FracOrders, t: float, grid: SpatialGrid) -> FourierField:
    """Field whose coefficient at every mode is :func:`kernel_symbol` at :math:`|\\xi|^2`."""
    lam, inv = grid.levels
    vals = kernel_symbol(kind, orders, np.full(lam.shape, float(t)), lam)
    return FourierField(grid, np.asarray(vals)[inv])


def product_weights(K1: np.ndarray, K2: np.ndarray, h: float):
    r"""Product-integration weights for :math:`\int_0^{t_n} K(t_n-s)\varphi(s)\,ds`.

    ``K1[m]`` and ``K2[m]`` are the first and second antiderivatives of the
    kernel (vanishing at 0) at :math:`t = mh`, for ``m = 0..N+1``. With
    :math:`\varphi` piecewise linear the rule reads
    :math:`\sum_{j=0}^n c_{n-j}\varphi_j + e_n\varphi_0`; returns ``(c, e)``,
    each of length ``N+1`` along axis 0.
    """
    N = K1.shape[0] - 2
    c = np.empty((N + 1,) + K1.shape[1:])
    c[0] = K2[1] / h
    c[1:] = (K2[2:N + 2] - 2.0 * K2[1:N + 1] + K2[0:N]) / h
    a0 = np.zeros_like(c)
    a0[1:] = K1[1:N + 1] - (K2[1:N + 1] - K2[0:N]) / h
    e = a0 - c
    e[0] = 0.0
    return c, e


_GL_NODES = 6
_GJ_NODES = 12
_LOG_NODES = 10


class KernelTable:
    """Kernel data on ``time_grid x`` the distinct :math:`\\lambda` levels of a grid.

    Attributes (arrays indexed ``[time, level]``):

    ``p``
        :math:`\\hat p(t_n, \\lambda)` for ``n = 0..N``.
    ``q_conv``, ``q_first``
        product-integration weights of the forcing term, see
        :func:`product_weights`.
    ``stoch``
        weights for the stochastic sum: row ``m`` (``m = 1..N``) multiplies the
        increment over :math:`[t_{n-m}, t_{n-m+1}]` in the value at ``t_n``.
        With ``stochastic_rule="left"`` these are :math:`\\hat P(mh, \\lambda)`;
        with ``"rms"`` (default) they carry the sign of :math:`\\hat P` and the
        root mean square of :math:`\\hat P` over the cell, so that the discrete
        variance is the exact Itô isometry for data frozen over cells.
    """

    def __init__(self, orders: FracOrders, time_grid: TimeGrid, lam_levels, stochastic_rule: str = "rms",
                 with_stochastic: bool = True):
        _check_orders(orders)
        if stochastic_rule not in ("rms", "left"):
            raise DomainError(f"unknown stochastic rule {stochastic_rule!r}")
        self.orders = orders
        self.time_grid = time_grid
        self.lam = np.asarray(lam_levels, dtype=float).ravel()
        self.stochastic_rule = stochastic_rule
        b = orders.beta
        N, h = time_grid.N, time_grid.h
        lam = self.lam[None, :]

        t = (np.arange(N + 2) * h)[:, None]
        z = -lam * t ** b
        p = np.ones((N + 1, lam.shape[1]))
        p[1:] = _ml(b, 1.0, z[1:N + 1])
        K1 = t ** b * _ml(b, 1.0 + b, z)
        K2 = t ** (1.0 + b) * _ml(b, 2.0 + b, z)
        self.p = _frozen(p)
        c, e = product_weights(K1, K2, h)
        self.q_conv = _frozen(c)
        self.q_first = _frozen(e)
        self.stoch = _frozen(self._stochastic_weights()) if with_stochastic else None

    def _pbg(self, r):
        b, g = self.orders.beta, self.orders.gamma
        return r ** (b - g) * _ml(b, 1.0 + b - g, -self.lam[None, :] * r ** b)

    def _stochastic_weights(self) -> np.ndarray:
        b, g = self.orders.beta, self.orders.gamma
        N, h = self.time_grid.N, self.time_grid.h
        L = self.lam.shape[0]
        w = np.zeros((N + 1, L))
        m = np.arange(1, N + 1, dtype=float)
        if self.stochastic_rule == "left":
            w[1:] = self._pbg((m * h)[:, None])
            return w
        # first cell: r = h v^{1/beta} turns the integrand into a Jacobi
        # weight times the entire function E^2(-lam h^beta v)
        alpha = (2.0 * (b - g) + 1.0) / b - 1.0
        first = h ** (2.0 * (b - g) + 1.0) / b * _jacobi_ml_square(b, 1.0 + b - g, alpha, self.lam * h ** b)
        sign1 = np.sign(_ml(b, 1.0 + b - g, -self.lam * h ** b))
        w[1] = sign1 * np.sqrt(first / h)
        if N >= 2:
            x, wx = np.polynomial.legendre.leggauss(_GL_NODES)
            mm = m[1:]
            r = ((mm - 0.5)[:, None] + 0.5 * x[None, :]) * h  # (cells, nodes)
            vals = self._pbg(r.reshape(-1, 1)).reshape(len(mm), _GL_NODES, L)
            mean_sq = 0.5 * np.einsum("k,mkl->ml", wx, vals * vals)
            sign = np.sign(self._pbg((mm * h)[:, None]))
            w[2:] = sign * np.sqrt(mean_sq)
        return w

    def symbols_at_nodes(self):
        """``(t, p, q, P)`` at nodes ``t_1..t_N`` for every level (for tabulation)."""
        b = self.orders.beta
        t = self.time_grid.nodes[1:, None]
        z = -self.lam[None, :] * t ** b
        q = t ** (b - 1.0) * _ml(b, b, z)
        P = self._pbg(t)
        return t[:, 0], self.p[1:], q, P


def _jacobi_ml_square(beta, gamma_ml, alpha, mu):
    r""":math:`\int_0^1 v^\alpha E_{\beta,\gamma}(-\mu v)^2\,dv` for every entry of ``mu``.

    For :math:`\mu \le 1` a Gauss-Jacobi rule is exact up to the smoothness of
    the entire factor. Larger :math:`\mu` are rescaled to
    :math:`\mu^{-\alpha-1}\int_0^\mu w^\alpha E^2(-w)\,dw`; the part over
    :math:`[0,1]` reuses the Jacobi rule and the rest is integrated in
    :math:`\ln w` on panels of width at most one.
    """
    mu = np.asarray(mu, dtype=float)
    v, wv = special.roots_jacobi(_GJ_NODES, 0.0, alpha)
    v = 0.5 * (v + 1.0)
    wv = wv * 0.5 ** (alpha + 1.0)
    small = mu <= 1.0
    out = np.empty_like(mu)
    if np.any(small):
        e = _ml(beta, gamma_ml, -mu[None, small] * v[:, None])
        out[small] = wv @ (e * e)
    big = ~small
    if np.any(big):
        e = _ml(beta, gamma_ml, -v)
        head = wv @ (e * e)
        span = np.log(mu[big])
        panels = int(math.ceil(span.max()))
        x, wx = np.polynomial.legendre.leggauss(_LOG_NODES)
        # panel k of level l covers [k, k+1] * span_l / panels
        frac = ((np.arange(panels)[:, None] + 0.5 * (x[None, :] + 1.0)) / panels).ravel()
        u = span[:, None] * frac[None, :]
        e = _ml(beta, gamma_ml, -np.exp(u))
        f = np.exp((alpha + 1.0) * u) * e * e
        tail = (span / panels * 0.5) * (f.reshape(len(span), panels, _LOG_NODES) @ wx).sum(axis=1)
        out[big] = mu[big] ** (-alpha - 1.0) * (head + tail)
    return out


def _ml(beta, gamma_ml, z):
    return np.asarray(mittag_leffler(beta, gamma_ml, np.asarray(z, dtype=float), 1e-10))


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a)
    a.flags.writeable = False
    return a
