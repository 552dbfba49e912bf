r"""Fractional integrals and derivatives of functions sampled on a uniform grid.

Notation follows the usual conventions on :math:`[0, T]`:

.. math::

    k_\beta(t) = \frac{t^{\beta-1}}{\Gamma(\beta)}, \qquad
    I^\beta\varphi = k_\beta * \varphi, \qquad
    D^\beta\varphi = \frac{d}{dt} I^{1-\beta}\varphi, \qquad
    \partial^\beta\varphi = D^\beta(\varphi - \varphi(0)).

All discrete operators are product-integration rules: the sampled function is
replaced by its piecewise-linear interpolant and the kernel is integrated
exactly against it on every cell. The weights are Toeplitz in the node
index, so each operator is a discrete convolution evaluated with the FFT.

Paths may declare *singular exponents* :math:`\sigma` (for instance
:math:`\sigma = \beta, 2\beta, \dots` for :math:`E_\beta(-t^\beta)`). For every
declared non-integer :math:`0 < \sigma < 2` the rule is augmented by starting
weights on the first few nodes so that it becomes exact for :math:`t^\sigma`
while staying exact for constants and linear functions. The operators propagate
the exponents to their outputs, so chained operators stay accurate near
:math:`t = 0`. A path without declared exponents is processed by the plain rule.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import signal, special

from .errors import DomainError

__all__ = [
    "TimeGrid",
    "SampledPath",
    "FracOrders",
    "kernel_k",
    "kernel_convolution",
    "fractional_integral",
    "fractional_integral_columns",
    "rl_derivative",
    "caputo_derivative",
    "power_path",
]

#: exponents at or above this value are not tracked on a path
EXPONENT_CAP = 4.0
#: exponents below this value receive starting corrections
_CORRECT_BELOW = 2.0
_MAX_CORRECTIONS = 6
#: declared exponents closer than this to an integer or to each other are merged
_MIN_GAP = 0.05


@dataclass(frozen=True)
class TimeGrid:
    """Uniform grid :math:`t_j = jh`, :math:`h = T/N`, on :math:`[0, T]`."""

    T: float
    N: int

    def __post_init__(self):
        if not (self.T > 0 and math.isfinite(self.T)):
            raise DomainError(f"horizon must be positive and finite, got {self.T}")
        if int(self.N) != self.N or self.N < 2:
            raise DomainError(f"need an integer N >= 2, got {self.N}")
        object.__setattr__(self, "N", int(self.N))

    @property
    def h(self) -> float:
        return self.T / self.N

    @property
    def nodes(self) -> np.ndarray:
        return np.arange(self.N + 1) * self.h

    def refine(self, factor: int = 2) -> "TimeGrid":
        return TimeGrid(self.T, self.N * factor)


def _clean_exponents(exps) -> tuple:
    out = []
    for s in sorted(float(e) for e in exps):
        if not (0.0 < s < EXPONENT_CAP) or not math.isfinite(s):
            continue
        if abs(s - round(s)) < 1e-12:
            continue
        if out and abs(s - out[-1]) < 1e-12:
            continue
        out.append(s)
    return tuple(out)


@dataclass(frozen=True)
class SampledPath:
    """Values of a real or complex function at the nodes of a :class:`TimeGrid`.

    ``singular_exponents`` lists non-integer powers :math:`t^\\sigma` present
    in the expansion of the function at zero; ``flagged`` lists node indices
    whose values are known to be of low accuracy (extrapolated).
    """

    grid: TimeGrid
    values: np.ndarray
    singular_exponents: tuple = ()
    flagged: tuple = field(default=())

    def __post_init__(self):
        v = np.array(self.values, copy=True)
        if v.dtype.kind not in "fc":
            v = v.astype(float)
        if v.ndim != 1 or v.shape[0] != self.grid.N + 1:
            raise DomainError(f"expected {self.grid.N + 1} values, got shape {v.shape}")
        if not np.all(np.isfinite(v)):
            raise DomainError("path values must be finite")
        v.flags.writeable = False
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "singular_exponents", _clean_exponents(self.singular_exponents))
        object.__setattr__(self, "flagged", tuple(sorted(set(int(i) for i in self.flagged))))

    @classmethod
    def from_function(cls, grid: TimeGrid, fn, singular_exponents=()) -> "SampledPath":
        return cls(grid, fn(grid.nodes), singular_exponents)

    @property
    def nodes(self) -> np.ndarray:
        return self.grid.nodes

    def trusted(self) -> np.ndarray:
        """Boolean mask of nodes that are not flagged."""
        m = np.ones(self.grid.N + 1, dtype=bool)
        m[list(self.flagged)] = False
        return m


def power_path(grid: TimeGrid, sigma: float) -> SampledPath:
    """The path :math:`t^\\sigma` with its exponent declared."""
    return SampledPath(grid, grid.nodes ** sigma, (sigma,))


@dataclass(frozen=True)
class FracOrders:
    r"""Time order :math:`\beta` and noise order :math:`\gamma` of the equation.

    .. math::

        \gamma_0 = \frac{(2\gamma - 1)_+}{\beta}, \qquad
        \sigma_0 = \gamma_0 + \varepsilon_0 1_{\gamma = 1/2}.

    Construction only checks that both orders lie in :math:`(0, 1)`; the
    standing constraint :math:`\gamma < \beta + 1/2` is reported by
    :attr:`satisfies_constraint` so that invalid pairs can still be diagnosed.
    """

    beta: float
    gamma: float
    eps0: float = 0.1

    def __post_init__(self):
        for name in ("beta", "gamma", "eps0"):
            v = getattr(self, name)
            if not (0.0 < v < 1.0):
                raise DomainError(f"{name} must lie in (0, 1), got {v}")

    @property
    def gamma0(self) -> float:
        return max(2.0 * self.gamma - 1.0, 0.0) / self.beta

    @property
    def sigma0(self) -> float:
        return self.gamma0 + (self.eps0 if self.gamma == 0.5 else 0.0)

    @property
    def satisfies_constraint(self) -> bool:
        return self.gamma < self.beta + 0.5

    @property
    def constraint_margin(self) -> float:
        """:math:`\\beta + 1/2 - \\gamma`; positive for admissible orders."""
        return self.beta + 0.5 - self.gamma


# {{{ kernels


def kernel_k(beta: float, t):
    """:math:`k_\\beta(t) = t^{\\beta-1}/\\Gamma(\\beta)` for ``t > 0``."""
    if not (0.0 < beta <= 1.0):
        raise DomainError(f"beta must lie in (0, 1], got {beta}")
    t = np.asarray(t, dtype=float)
    if np.any(t <= 0):
        raise DomainError("k_beta is only defined for t > 0")
    out = np.power(t, beta - 1.0) * special.rgamma(beta)
    return float(out) if out.ndim == 0 else out


def kernel_convolution(a: float, b: float, t, step: float = 1.0 / 32.0):
    """Quadrature of :math:`(k_a * k_b)(t) = \\int_0^t k_a(t-s) k_b(s)\\,ds`.

    The integrand is singular at both ends; a tanh-sinh rule is applied with
    the distances to both endpoints computed without cancellation, so the
    integrand is always evaluated through :func:`kernel_k`. The value should
    reproduce :math:`k_{a+b}(t)`; accuracy degrades for orders below about
    0.06, where the endpoint layers are thinner than double precision resolves.
    """
    tt = np.atleast_1d(np.asarray(t, dtype=float))
    if np.any(tt <= 0):
        raise DomainError("t must be positive")
    # truncate where the omitted end pieces, of size frac**min(a, b), are
    # negligible; beyond |u| = 6 the endpoint distances underflow
    umax = min(6.0, math.asinh(40.0 / (math.pi * min(a, b))))
    u = np.arange(-umax, umax + 0.5 * step, step)
    y = 0.5 * np.pi * np.sinh(u)
    frac_lo = 1.0 / (1.0 + np.exp(-2.0 * y))  # s / t
    frac_hi = 1.0 / (1.0 + np.exp(2.0 * y))  # (t - s) / t
    w = step * 0.5 * np.pi * np.cosh(u) / (2.0 * np.cosh(y) ** 2)
    keep = (frac_lo > 0) & (frac_hi > 0)
    out = np.empty_like(tt)
    for i, ti in enumerate(tt):
        s = ti * frac_lo[keep]
        r = ti * frac_hi[keep]
        out[i] = ti * np.sum(w[keep] * kernel_k(a, r) * kernel_k(b, s))
    return float(out[0]) if np.ndim(t) == 0 else out


# }}}


# {{{ weights


def _second_difference(p: float, m: np.ndarray) -> np.ndarray:
    """:math:`(m+1)^p - 2m^p + (m-1)^p` for integers ``m >= 1`` without cancellation."""
    m = m.astype(float)
    x = 1.0 / m
    with np.errstate(divide="ignore"):
        lo = np.expm1(p * np.log1p(-x))
    return m ** p * (np.expm1(p * np.log1p(x)) + lo)


def _forward_difference(p: float, m: np.ndarray) -> np.ndarray:
    """:math:`(m+1)^p - m^p` for integers ``m >= 0``."""
    m = m.astype(float)
    out = np.ones_like(m)
    pos = m > 0
    mp = m[pos]
    out[pos] = mp ** p * np.expm1(p * np.log1p(1.0 / mp))
    return out


@dataclass(frozen=True)
class _IntegralWeights:
    conv: np.ndarray  # c_m, applied to phi_{n-m}
    first: np.ndarray  # extra weight on phi_0 at node n


def _integral_weights(beta: float, N: int, h: float) -> _IntegralWeights:
    p = beta + 1.0
    m = np.arange(N + 1)
    scale = h ** beta * special.rgamma(beta + 2.0)
    c = np.empty(N + 1)
    c[0] = 1.0
    c[1:] = _second_difference(p, m[1:])
    c *= scale
    # weight of phi_0 at node n: K1(nh) - (K2(nh) - K2((n-1)h))/h, written as
    # n^beta/Gamma(beta+2) * (p - n (1 - (1 - 1/n)^p))
    n = m[1:].astype(float)
    a0 = np.zeros(N + 1)
    with np.errstate(divide="ignore"):
        a0[1:] = n ** beta * (p + n * np.expm1(p * np.log1p(-1.0 / n))) * scale
    first = a0 - c
    first[0] = 0.0
    return _IntegralWeights(c, first)


def _l1_weights(beta: float, N: int, h: float) -> np.ndarray:
    """Weights ``b_m`` of the L1 rule applied to ``phi_{j+1} - phi_j`` with ``m = n-1-j``."""
    return _forward_difference(1.0 - beta, np.arange(N)) * h ** (-beta) * special.rgamma(2.0 - beta)


def _toeplitz(c: np.ndarray, x: np.ndarray) -> np.ndarray:
    """``y_n = sum_{j<=n} c_{n-j} x_j`` along axis 0."""
    n = x.shape[0]
    if x.ndim == 1:
        if n <= 64:
            return np.convolve(c[:n], x)[:n]
        return signal.fftconvolve(c[:n], x)[:n]
    cc = c[:n].reshape((n,) + (1,) * (x.ndim - 1))
    if n <= 64:
        return signal.convolve(cc, x, method="direct")[:n]
    return signal.fftconvolve(cc, x, axes=0)[:n]


def _plain_integral(beta, values, h):
    N = values.shape[0] - 1
    w = _integral_weights(beta, N, h)
    first = w.first.reshape((N + 1,) + (1,) * (values.ndim - 1))
    return _toeplitz(w.conv, values) + first * values[0]


def _plain_caputo(beta, values, h):
    N = values.shape[0] - 1
    b = _l1_weights(beta, N, h)
    diff = np.diff(values, axis=0)
    out = np.zeros_like(values, dtype=np.result_type(values, float))
    out[1:] = _toeplitz(b, diff)
    return out


# }}}


# {{{ starting corrections


def _correction_exponents(exps) -> list:
    chosen = []
    for s in exps:
        if s >= _CORRECT_BELOW:
            break
        if abs(s - round(s)) < _MIN_GAP:
            continue
        if chosen and s - chosen[-1] < _MIN_GAP:
            continue
        chosen.append(s)
        if len(chosen) == _MAX_CORRECTIONS:
            break
    return chosen


def _with_corrections(plain, exact, exps, values, h, skip_first=False):
    """Apply ``plain`` and add starting weights making it exact for ``t^sigma``.

    ``exact(sigma, t)`` returns the exact operator applied to ``t^sigma``. The
    powers 0 and 1 are included in the moment system so that the corrected rule
    keeps the exactness of the plain rule on linear functions.
    """
    out = plain(values)
    sig = _correction_exponents(exps)
    if not sig:
        return out
    N = values.shape[0] - 1
    basis = [0.0, 1.0] + sig
    m = len(basis)
    if N < 2 * m:
        return out
    t = np.arange(N + 1) * h
    defects = np.zeros((m, N + 1))
    for i, s in enumerate(sig, start=2):
        samples = t ** s
        with np.errstate(divide="ignore"):
            ex = exact(s, t)
        d = ex - plain(samples)
        d[0] = 0.0
        defects[i] = d
    if skip_first:
        defects[:, 0] = 0.0
    k = np.arange(1, m + 1, dtype=float)
    U = k[None, :] ** np.array(basis)[:, None]
    rhs = defects / (h ** np.array(basis))[:, None]
    W = np.linalg.solve(U, rhs)  # (m nodes) x (N+1 targets)
    start = values[1:m + 1]
    corr = np.tensordot(W.T, start, axes=(1, 0))
    return out + corr


def _shift(exps, delta, regular=(0.0, 1.0, 2.0, 3.0)):
    return _clean_exponents([s + delta for s in tuple(exps) + tuple(regular)])


# }}}


def fractional_integral(beta: float, path: SampledPath) -> SampledPath:
    r"""Riemann-Liouville integral :math:`I^\beta\varphi` at the grid nodes.

    Product integration of :math:`k_\beta` against the piecewise-linear
    interpolant; exact for linear :math:`\varphi` and for declared powers
    :math:`t^\sigma`, :math:`\sigma < 2`. For ``beta == 1`` this is the
    trapezoid rule. Node 0 maps to 0.
    """
    if not (0.0 < beta <= 1.0):
        raise DomainError(f"beta must lie in (0, 1], got {beta}")
    vals = fractional_integral_columns(beta, path.values, path.grid, path.singular_exponents)
    return SampledPath(path.grid, vals, _shift(path.singular_exponents, beta))


def fractional_integral_columns(beta: float, values, grid: TimeGrid, singular_exponents=()) -> np.ndarray:
    """:func:`fractional_integral` applied along axis 0 of an array of node values.

    Every column shares the grid and the declared exponents; used for
    mode-by-mode work where building one path per mode would be wasteful.
    """
    if not (0.0 < beta <= 1.0):
        raise DomainError(f"beta must lie in (0, 1], got {beta}")
    values = np.asarray(values)
    if values.shape[0] != grid.N + 1:
        raise DomainError(f"expected {grid.N + 1} rows, got {values.shape[0]}")
    h = grid.h

    def exact(s, t):
        return math.exp(special.gammaln(s + 1.0) - special.gammaln(s + 1.0 + beta)) * t ** (s + beta)

    vals = _with_corrections(lambda v: _plain_integral(beta, v, h), exact,
                             _clean_exponents(singular_exponents), values, h)
    vals = np.array(vals)
    vals[0] = 0.0
    return vals


def _extrapolate_first(vals):
    vals = np.array(vals)
    vals[0] = 2.0 * vals[1] - vals[2]
    return vals


def caputo_derivative(beta: float, path: SampledPath) -> SampledPath:
    r"""Caputo derivative :math:`\partial^\beta\varphi` by the L1 rule.

    .. math::

        \partial^\beta\varphi(t_n) \approx \sum_{j=0}^{n-1}
        \frac{\varphi_{j+1}-\varphi_j}{h}\int_{t_j}^{t_{j+1}} k_{1-\beta}(t_n-s)\,ds

    Node 0 is extrapolated linearly and flagged.
    """
    if not (0.0 < beta < 1.0):
        raise DomainError(f"beta must lie in (0, 1), got {beta}")
    h = path.grid.h

    def exact(s, t):
        return math.exp(special.gammaln(s + 1.0) - special.gammaln(s + 1.0 - beta)) * t ** (s - beta)

    vals = _with_corrections(lambda v: _plain_caputo(beta, v, h), exact,
                             path.singular_exponents, path.values, h)
    exps = _shift(path.singular_exponents, -beta, regular=(1.0, 2.0, 3.0))
    return SampledPath(path.grid, _extrapolate_first(vals), exps, flagged=(0,))


def rl_derivative(beta: float, path: SampledPath) -> SampledPath:
    r"""Riemann-Liouville derivative :math:`D^\beta\varphi = \frac{d}{dt}I^{1-\beta}\varphi`.

    The product-integration value of :math:`I^{1-\beta}\varphi` is
    differentiated exactly, which gives the L1 rule plus the term
    :math:`\varphi(0)k_{1-\beta}(t)`. Node 0, where this is singular, is
    extrapolated and flagged.
    """
    if not (0.0 < beta < 1.0):
        raise DomainError(f"beta must lie in (0, 1), got {beta}")
    cap = caputo_derivative(beta, path)
    t = path.grid.nodes
    vals = np.array(cap.values)
    vals[1:] = vals[1:] + path.values[0] * np.power(t[1:], -beta) * special.rgamma(1.0 - beta)
    return SampledPath(path.grid, _extrapolate_first(vals), cap.singular_exponents, flagged=(0,))
