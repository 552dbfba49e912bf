r"""Two-parameter Mittag-Leffler function on the real line.

.. math::

    E_{\beta,\gamma}(z) = \sum_{k=0}^\infty \frac{z^k}{\Gamma(\beta k + \gamma)}

Three evaluation regimes are used and selected per argument:

``series``
    Truncated power series with compensated summation. Chosen whenever the
    largest term is small enough that cancellation keeps the result inside
    the accuracy target (always for ``z >= 0`` when the series converges in
    a bounded number of terms).
``contour``
    The Hankel contour of the Laplace-inversion representation collapsed
    onto the branch cut, which for ``0 < beta < 1`` gives

    .. math::

        E_{\beta,\gamma}(z) = \frac{1}{\pi\beta}\int_0^\infty
            r^{(1-\gamma)/\beta} e^{-r^{1/\beta}}
            \frac{r\sin(\pi(1-\gamma)) - z\sin(\pi(1-\gamma+\beta))}
                 {r^2 - 2rz\cos(\pi\beta) + z^2}\,dr
            + [z > 0]\,\frac{1}{\beta} z^{(1-\gamma)/\beta} e^{z^{1/\beta}},

    valid for ``gamma <= 1`` (larger ``gamma`` is reduced with the
    recurrence). The integral is evaluated with double-exponential
    trapezoid rules on panels split at the near-pole of the integrand.
    For ``beta == 1`` the Euler integral
    :math:`\Gamma(\gamma-1)^{-1}\int_0^1 e^{zs}(1-s)^{\gamma-2}ds` is used
    with Gauss-Jacobi nodes.
``asymptotic``
    :math:`-\sum_{k\ge1} z^{-k}/\Gamma(\gamma-\beta k)` for ``z < -50``,
    optimally truncated.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass

import numpy as np
from scipy import special

from .errors import AccuracyError, DomainError

__all__ = [
    "MLParams",
    "mittag_leffler",
    "ml",
    "ml_asymptotic_check",
    "regime_of",
    "Z_MIN",
    "ASYMPTOTIC_SWITCH",
]

Z_MIN = -1e9
ASYMPTOTIC_SWITCH = -50.0

_SERIES_TERMS = 800
_CANCELLATION_BUDGET = 1e4  # max sum of |terms| accepted for z < 0
_DE_STEP = 1.0 / 16.0  # initial step; halved up to _DE_REFINEMENTS times
_DE_REFINEMENTS = 3
_DE_TMAX = 3.2
_DE_TMIN_TAIL = 4.5
_DE_TMAX_TAIL = 2.2
_JACOBI_NODES = 96
_ASYMPTOTIC_TERMS = 60
_EPS = np.finfo(float).eps
_TAIL_LOG = math.log(_EPS) - 5.0  # log-size of a negligible series term
_CHUNK = 2048  # arguments per vectorized block, bounds the series work array


@dataclass(frozen=True)
class MLParams:
    """Parameters of :math:`E_{\\beta,\\gamma}`.

    ``gamma_ml`` is the second Mittag-Leffler parameter and is unrelated to
    the noise order used elsewhere in the package.
    """

    beta: float
    gamma_ml: float = 1.0
    accuracy_target: float = 1e-8

    def __post_init__(self):
        _check_params(self.beta, self.gamma_ml)
        if not self.accuracy_target > 0:
            raise DomainError(f"accuracy_target must be positive, got {self.accuracy_target}")


def _check_params(beta: float, gamma_ml: float) -> None:
    if not (0.0 < beta <= 1.0):
        raise DomainError(f"beta must lie in (0, 1], got {beta}")
    if not gamma_ml > 0.0:
        raise DomainError(f"gamma_ml must be positive, got {gamma_ml}")


# {{{ series


def _series_logterms(beta, gamma_ml, absz):
    """Log-magnitudes of the series terms, truncated where all rows have died off.

    Term magnitudes grow with ``|z|`` for every index, so the cut is taken from
    the largest argument of the block.
    """
    k = np.arange(_SERIES_TERMS, dtype=float)
    lg = special.gammaln(beta * k + gamma_ml)
    top = k * math.log(max(float(np.max(absz)), 1e-300)) - lg
    top[0] = -lg[0]
    peak = int(np.argmax(top))
    small = np.nonzero(top[peak:] < _TAIL_LOG)[0]
    nterms = peak + int(small[0]) + 1 if small.size else _SERIES_TERMS
    with np.errstate(divide="ignore"):
        logz = np.log(absz)[:, None]
    logt = k[None, :nterms] * logz - lg[None, :nterms]
    logt[:, 0] = -lg[0]
    return logt


def _logsum(logt):
    m = np.max(logt, axis=1)
    return m + np.log(np.sum(np.exp(logt - m[:, None]), axis=1))


def _series_ok(beta, gamma_ml, z, target):
    """Mask of arguments for which the series meets ``target``."""
    absz = np.abs(z)
    logt = _series_logterms(beta, gamma_ml, np.maximum(absz, 1e-300))
    # the tail must have died off before the last term
    converged = logt[:, -1] < _TAIL_LOG
    cancel_ok = (z >= 0) | (_logsum(logt) < math.log(min(_CANCELLATION_BUDGET, 0.01 * target / _EPS)))
    return (converged & cancel_ok) | (absz <= 0.5)


def _series(beta, gamma_ml, z):
    z = np.asarray(z, dtype=float)
    absz = np.maximum(np.abs(z), 1e-300)
    logt = _series_logterms(beta, gamma_ml, absz)
    nterms = logt.shape[1]
    k = np.arange(nterms)
    sign = np.where((z[:, None] < 0) & (k[None, :] % 2 == 1), -1.0, 1.0)
    # the reciprocal gamma is positive for positive arguments, so signs only
    # come from z^k
    terms = sign * np.exp(logt)
    terms[z == 0, 1:] = 0.0
    # Neumaier compensated summation along the series index
    s = np.zeros(len(z))
    c = np.zeros(len(z))
    for j in range(nterms):
        x = terms[:, j]
        tmp = s + x
        big = np.abs(s) >= np.abs(x)
        c += np.where(big, (s - tmp) + x, (x - tmp) + s)
        s = tmp
    err = _EPS * np.sum(np.abs(terms), axis=1) * 4.0
    return s + c, err


# }}}


# {{{ contour integral


@functools.lru_cache(maxsize=None)
def _de_nodes(step: float, tmin: float, tmax: float):
    """Nodes ``k * step`` covering ``[tmin, tmax]`` with even end indices.

    The even-indexed subset is the grid with twice the step, so one set of
    integrand values yields both trapezoid sums of the error estimate.
    """
    lo = -2 * math.ceil(-tmin / (2.0 * step))
    hi = 2 * math.ceil(tmax / (2.0 * step))
    k = np.arange(lo, hi + 1)
    return k * step, (k % 2 == 0)


def _pair(w, fx, even):
    fine = np.sum(w * fx, axis=1)
    coarse = 2.0 * np.sum((w * fx)[:, even], axis=1)
    return fine, coarse


def _tanh_sinh(a, b, f, step):
    """Tanh-sinh rule on rows ``[a_i, b_i]`` at ``step`` and ``2 * step``."""
    t, even = _de_nodes(step, -_DE_TMAX, _DE_TMAX)
    y = 0.5 * np.pi * np.sinh(t)
    # fractional distances from each end, computed without cancellation
    left = 1.0 / (1.0 + np.exp(-2.0 * y))
    right = 1.0 / (1.0 + np.exp(2.0 * y))
    dxdt = 0.25 * np.pi * np.cosh(t) / np.cosh(y) ** 2
    width = (b - a)[:, None]
    x = np.where(left[None, :] <= 0.5, a[:, None] + width * left, b[:, None] - width * right)
    w = step * width * dxdt[None, :]
    return _pair(w, f(x), even)


def _exp_sinh(a, f, step):
    """Exp-sinh rule on rows ``[a_i, inf)`` at ``step`` and ``2 * step``."""
    # the left range reaches e^{-70} so that a sharp peak at ``a`` is resolved
    # on the right, exp(-r^{1/beta}) underflows long before x - a = e^7
    t, even = _de_nodes(step, -_DE_TMIN_TAIL, _DE_TMAX_TAIL)
    y = 0.5 * np.pi * np.sinh(t)
    e = np.exp(y)
    x = a[:, None] + e[None, :]
    w = step * (0.5 * np.pi * np.cosh(t) * e)[None, :]
    return _pair(w, f(x), even)


def _contour_integral(beta, gamma_ml, z, step):
    p = (1.0 - gamma_ml) / beta
    s1 = math.sin(math.pi * (1.0 - gamma_ml))
    s2 = math.sin(math.pi * (1.0 - gamma_ml + beta))
    cb = math.cos(math.pi * beta)
    zc = z[:, None]

    sb2 = math.sin(math.pi * beta) ** 2
    zcb = zc * cb
    zs2 = zc * s2
    zsb = zc * zc * sb2

    def f(r):
        with np.errstate(over="ignore", under="ignore", invalid="ignore", divide="ignore"):
            lr = np.log(r)
            expo = -np.exp(lr / beta)
            if p != 0.0:
                expo = expo + p * lr
            d = r - zcb
            val = np.exp(expo) * (r * s1 - zs2) / (d * d + zsb)
        return np.where(np.isfinite(val), val, 0.0)

    # near-pole of the rational factor, if it lies on the positive axis
    vpk = z * cb
    vpk = np.where(vpk > 0, vpk, np.abs(z))
    b1 = np.minimum(1.0, vpk)
    b2 = np.maximum(1.0, vpk)
    zero = np.zeros_like(z)
    parts = [_tanh_sinh(zero, b1, f, step), _tanh_sinh(b1, b2, f, step), _exp_sinh(b2, f, step)]
    fine = sum(q[0] for q in parts) / (math.pi * beta)
    coarse = sum(q[1] for q in parts) / (math.pi * beta)
    pole = np.zeros_like(z)
    pos = z > 0
    if np.any(pos):
        zp = z[pos]
        with np.errstate(over="ignore"):
            pole[pos] = np.power(zp, p) * np.exp(np.power(zp, 1.0 / beta)) / beta
    return fine + pole, coarse + pole


def _contour_adaptive(beta, gamma_ml, z, target):
    """Halve the step for the arguments whose estimate misses ``target``."""
    step = _DE_STEP
    val = np.empty_like(z)
    err = np.full_like(z, np.inf)
    todo = np.arange(z.size)
    for _ in range(_DE_REFINEMENTS + 1):
        fine, coarse = _contour_integral(beta, gamma_ml, z[todo], step)
        with np.errstate(invalid="ignore"):
            e = np.abs(fine - coarse)
        val[todo], err[todo] = fine, e
        scale = np.maximum(1.0, np.abs(fine))
        todo = todo[~(e <= target * scale)]
        if todo.size == 0:
            break
        step *= 0.5
    return val, err


def _contour_reduced(beta, gamma_ml, z, target=1e-8):
    """Collapsed-contour value for ``beta < 1`` with ``gamma_ml`` reduced to ``(0, 1]``."""
    shifts = max(0, math.ceil((gamma_ml - 1.0) / beta - 1e-12))
    g0 = gamma_ml - shifts * beta
    val, err = _contour_adaptive(beta, g0, z, target)
    g = g0
    for _ in range(shifts):
        # E_{b, g+b}(z) = (E_{b, g}(z) - 1/Gamma(g)) / z
        val = (val - special.rgamma(g)) / z
        err = err / np.abs(z)
        g += beta
    return val, err


@functools.lru_cache(maxsize=64)
def _jacobi(alpha: float):
    x, w = special.roots_jacobi(_JACOBI_NODES, alpha, 0.0)
    s = 0.5 * (x + 1.0)
    w = w * 0.5 ** (alpha + 1.0)
    return s, w


def _euler_integral(gamma_ml, z):
    """E_{1, gamma}(z) through the Euler integral (gamma > 1) and upward recurrence."""
    if gamma_ml <= 1.0:
        inner, err = _euler_integral(gamma_ml + 1.0, z)
        return special.rgamma(gamma_ml) + z * inner, err * np.abs(z)
    s, w = _jacobi(gamma_ml - 2.0)
    vals = np.exp(np.outer(z, s)) @ w * special.rgamma(gamma_ml - 1.0)
    return vals, _EPS * 10 * np.maximum(1.0, np.abs(vals))


# }}}


# {{{ asymptotic


def _asymptotic(beta, gamma_ml, z):
    k = np.arange(1, _ASYMPTOTIC_TERMS + 1, dtype=float)
    coef = special.rgamma(gamma_ml - beta * k)
    inv = np.broadcast_to((1.0 / z)[:, None], (z.size, _ASYMPTOTIC_TERMS))
    with np.errstate(over="ignore", under="ignore", invalid="ignore"):
        terms = -np.cumprod(inv, axis=1) * coef[None, :]
    mag = np.abs(terms)
    mag = np.where(coef[None, :] == 0.0, np.inf, mag)
    # optimal truncation: stop before the smallest nonzero term
    cut = np.argmin(np.where(np.isfinite(mag), mag, np.inf), axis=1)
    idx = np.arange(_ASYMPTOTIC_TERMS)[None, :]
    keep = idx < np.maximum(cut[:, None], 1)
    terms = np.where(np.isfinite(terms), terms, 0.0)
    val = np.sum(np.where(keep, terms, 0.0), axis=1)
    err = np.abs(terms[np.arange(len(z)), cut])
    if beta == 1.0:
        # the exponentially small pole contribution is below 1e-21 here
        err = err + np.exp(z) * np.abs(z) ** (1.0 - gamma_ml)
    return val, err


# }}}


def regime_of(beta: float, gamma_ml: float, z, accuracy_target: float = 1e-8) -> np.ndarray:
    """Name of the regime used for each argument (``series``, ``contour`` or ``asymptotic``)."""
    z = np.atleast_1d(np.asarray(z, dtype=float))
    out = np.full(z.shape, "contour", dtype=object)
    far = z < ASYMPTOTIC_SWITCH
    out[far] = "asymptotic"
    if np.any(~far):
        near = np.nonzero(~far)[0]
        series = _series_ok(beta, gamma_ml, z[near], accuracy_target)
        out[near[series]] = "series"
    return out


def mittag_leffler(beta: float, gamma_ml: float, z, accuracy_target: float = 1e-8,
                   regime: str | None = None):
    """Evaluate :math:`E_{\\beta,\\gamma}(z)` elementwise for real ``z``.

    The error is at most ``accuracy_target`` in absolute terms for values of
    modest size and relative to :math:`|E|` when it exceeds one. ``regime``
    forces a particular evaluation path (used by the continuity tests).

    Raises :class:`DomainError` for parameters outside ``0 < beta <= 1``,
    ``gamma_ml > 0`` or arguments below ``Z_MIN``, and
    :class:`AccuracyError` when the selected regime cannot reach the target.
    """
    _check_params(beta, gamma_ml)
    zarr = np.asarray(z, dtype=float)
    scalar = zarr.ndim == 0
    zf = np.atleast_1d(zarr).ravel()
    if not np.all(np.isfinite(zf)):
        raise DomainError("arguments must be finite")
    if np.any(zf < Z_MIN):
        raise DomainError(f"arguments below z_min={Z_MIN:g} are outside the validated domain")

    if zf.size > _CHUNK:
        parts = [mittag_leffler(beta, gamma_ml, zf[i:i + _CHUNK], accuracy_target, regime)
                 for i in range(0, zf.size, _CHUNK)]
        out = np.concatenate(parts).reshape(np.shape(zarr))
        return out

    if regime is None:
        names = regime_of(beta, gamma_ml, zf, accuracy_target)
    else:
        if regime not in ("series", "contour", "asymptotic"):
            raise DomainError(f"unknown regime {regime!r}")
        names = np.full(zf.shape, regime, dtype=object)

    out = np.empty_like(zf)
    for name in ("series", "contour", "asymptotic"):
        mask = names == name
        if not np.any(mask):
            continue
        zz = zf[mask]
        if name == "series":
            val, err = _series(beta, gamma_ml, zz)
        elif name == "asymptotic":
            if np.any(zz >= 0):
                raise DomainError("the asymptotic regime needs negative arguments")
            val, err = _asymptotic(beta, gamma_ml, zz)
        elif beta == 1.0:
            val, err = _euler_integral(gamma_ml, zz)
        else:
            val, err = _contour_reduced(beta, gamma_ml, zz, accuracy_target)
        if not np.all(np.isfinite(val)):
            raise DomainError(f"E_{{{beta},{gamma_ml}}} overflows double precision on part of the input")
        scale = np.maximum(1.0, np.abs(val))
        bad = ~(err <= accuracy_target * scale)
        if np.any(bad):
            i = int(np.argmax(np.where(bad, err / scale, -np.inf)))
            raise AccuracyError(name, float(err[i] / scale[i]), accuracy_target)
        out[mask] = val
    out = out.reshape(np.shape(zarr))
    return float(out) if scalar else out


def ml(params: MLParams, z: float) -> float:
    """Scalar :math:`E_{\\beta,\\gamma}(z)` for the parameters in ``params``."""
    return float(mittag_leffler(params.beta, params.gamma_ml, z, params.accuracy_target))


def ml_asymptotic_check(params: MLParams, t: float) -> float:
    """Return :math:`t E_{\\beta,\\gamma}(-t)\\Gamma(\\gamma-\\beta)`, which tends to one."""
    a = params.gamma_ml - params.beta
    if not (-1.0 < a < 1.0):
        raise DomainError("need -1 < gamma_ml - beta < 1")
    if a == 0.0:
        raise DomainError("gamma_ml == beta puts Gamma(gamma_ml - beta) at a pole")
    if t < 1e3:
        raise DomainError("the limit check needs t >= 1e3")
    return t * ml(params, -t) * math.gamma(a)
