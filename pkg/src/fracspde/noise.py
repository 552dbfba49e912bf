r"""Brownian increments, the white-noise basis and the Itô-isometry oracle.

Increments :math:`\Delta W^k_j = W^k_{t_{j+1}} - W^k_{t_j}` are drawn from
counter-based Philox streams. The stream of process ``k`` in Monte Carlo
sample ``s`` is keyed by ``SeedSequence(seed, spawn_key=(s, k))``, so a sample
is reproducible on its own, whatever order or worker evaluates it.

For space-time white noise :math:`B_t = \sum_k \eta^k W^k_t` the functions
:math:`\eta^k` are the real orthonormal Fourier basis of :math:`L_2` on the
torus, ordered by :math:`|\xi|` so that truncation at ``K`` keeps the
smoothest directions.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate, signal

from .errors import DomainError, ResourceError
from .frac_calculus import TimeGrid
from .spectral_kernels import FourierField, SpatialGrid

__all__ = [
    "NoiseBasis",
    "NoiseSpec",
    "NoiseRealization",
    "sample_wiener",
    "white_noise_basis",
    "white_noise_coefficients",
    "ito_isometry_oracle",
    "left_endpoint_weights",
    "stochastic_convolution",
    "DEFAULT_MEMORY_BUDGET",
]

DEFAULT_MEMORY_BUDGET = 256 * 2 ** 20  # bytes of increments per realization


class NoiseBasis(enum.Enum):
    INDEPENDENT_SCALAR = "independent_scalar"
    SPACETIME_WHITE = "spacetime_white"


@dataclass(frozen=True)
class NoiseSpec:
    """Truncation ``K`` of the family :math:`W^1, W^2, \\dots`, its basis and seed."""

    K: int
    basis: NoiseBasis = NoiseBasis.INDEPENDENT_SCALAR
    seed: int = 0
    memory_budget: int = DEFAULT_MEMORY_BUDGET

    def __post_init__(self):
        if int(self.K) != self.K or self.K < 1:
            raise DomainError(f"K must be a positive integer, got {self.K}")
        if not (0 <= int(self.seed) < 2 ** 64):
            raise DomainError("seed must be a 64-bit unsigned integer")
        object.__setattr__(self, "basis", NoiseBasis(self.basis))
        object.__setattr__(self, "K", int(self.K))
        object.__setattr__(self, "seed", int(self.seed))


@dataclass(frozen=True)
class NoiseRealization:
    """``K x N`` increments for one Monte Carlo sample."""

    spec: NoiseSpec
    grid: TimeGrid
    increments: np.ndarray
    sample_index: int = 0

    def __post_init__(self):
        inc = np.array(self.increments, dtype=float, copy=True)
        if inc.shape != (self.spec.K, self.grid.N):
            raise DomainError(f"increments must have shape {(self.spec.K, self.grid.N)}, got {inc.shape}")
        inc.flags.writeable = False
        object.__setattr__(self, "increments", inc)

    def paths(self) -> np.ndarray:
        """:math:`W^k_{t_j}` for ``j = 0..N``."""
        out = np.zeros((self.spec.K, self.grid.N + 1))
        np.cumsum(self.increments, axis=1, out=out[:, 1:])
        return out


def substream(seed: int, sample_index: int, k: int) -> np.random.Generator:
    """Generator of process ``k`` in sample ``sample_index``."""
    ss = np.random.SeedSequence(entropy=seed, spawn_key=(int(sample_index), int(k)))
    return np.random.Generator(np.random.Philox(ss))


def sample_wiener(spec: NoiseSpec, grid: TimeGrid, sample_index: int = 0) -> NoiseRealization:
    """Independent :math:`N(0, h)` increments for every process of ``spec``."""
    nbytes = spec.K * grid.N * 8
    if nbytes > spec.memory_budget:
        raise ResourceError(
            f"K*N = {spec.K}*{grid.N} increments need {nbytes} bytes, budget is {spec.memory_budget}"
        )
    sd = math.sqrt(grid.h)
    inc = np.empty((spec.K, grid.N))
    for k in range(spec.K):
        inc[k] = substream(spec.seed, sample_index, k).standard_normal(grid.N) * sd
    return NoiseRealization(spec, grid, inc, int(sample_index))


# {{{ white noise basis


def _basis_order(grid: SpatialGrid):
    """Representatives of the pairs {xi, -xi} sorted by |k|^2, then lexicographically."""
    ks = np.stack([k.ravel() for k in grid.integer_modes], axis=1)
    n = grid.n
    seen = set()
    reps = []
    for k in sorted(map(tuple, ks), key=lambda v: (sum(c * c for c in v), v)):
        neg = tuple((-c + n // 2) % n - n // 2 for c in k)
        if k in seen:
            continue
        seen.add(k)
        seen.add(neg)
        reps.append((k, neg == k))
    return reps


def white_noise_basis(grid: SpatialGrid, K: int | None = None) -> np.ndarray:
    """Grid values of the first ``K`` real orthonormal basis functions, shape ``(K, *grid.shape)``.

    Every pair :math:`\\pm\\xi` contributes :math:`\\sqrt{2/L^d}\\cos(\\xi\\cdot x)`
    and :math:`\\sqrt{2/L^d}\\sin(\\xi\\cdot x)`; self-conjugate modes (the
    constant and the Nyquist modes) contribute one cosine normalized by
    :math:`\\sqrt{1/L^d}`. With ``K = grid.size`` the family is complete and
    :math:`\\sum_k \\eta^k(x)^2 = n^d/L^d` at every grid point.
    """
    total = grid.size
    K = total if K is None else int(K)
    if not (1 <= K <= total):
        raise DomainError(f"K must lie in [1, {total}] for this grid, got {K}")
    x = grid.points()
    out = np.empty((K,) + grid.shape)
    i = 0
    vol = grid.volume
    for k, selfconj in _basis_order(grid):
        phase = sum((2.0 * np.pi / grid.L) * c * xc for c, xc in zip(k, x))
        if selfconj:
            funcs = [np.cos(phase) / math.sqrt(vol)]
        else:
            funcs = [math.sqrt(2.0 / vol) * np.cos(phase), math.sqrt(2.0 / vol) * np.sin(phase)]
        for f in funcs:
            if i == K:
                return out
            out[i] = f
            i += 1
    return out


def white_noise_coefficients(spec: NoiseSpec, grid: SpatialGrid, h_field: FourierField) -> list:
    """The family :math:`g^k = h\\,\\eta^k`, ``k = 1..K``, as Fourier fields.

    Products are formed on the grid and transformed back, so the result is
    the exact grid representation of the pointwise product.
    """
    if spec.basis is not NoiseBasis.SPACETIME_WHITE:
        raise DomainError("white_noise_coefficients needs a SPACETIME_WHITE spec")
    if h_field.grid != grid:
        raise DomainError("h_field lives on a different grid")
    eta = white_noise_basis(grid, spec.K)
    hv = h_field.values()
    return [FourierField.from_values(grid, hv * e) for e in eta]


# }}}


# {{{ isometry oracle and discrete convolution


def _local_exponent(fn, t):
    s1, s2 = 1e-12 * t, 1e-10 * t
    a, b = fn(s1), fn(s2)
    if a == 0.0 or b == 0.0:
        return 0.0
    return math.log(abs(b) / abs(a)) / math.log(s2 / s1)


def ito_isometry_oracle(kernel, t: float, grid: TimeGrid | None = None, singular_exponent: float | None = None,
                        rtol: float = 1e-11) -> float:
    """Quadrature of :math:`\\int_0^t \\mathrm{kernel}(s)^2\\,ds`.

    An algebraic singularity :math:`\\mathrm{kernel}(s)^2 \\sim s^{\\alpha}` at
    the origin is integrated with the weight :math:`s^\\alpha` built into the
    rule; ``alpha`` is estimated from ``kernel`` near 0 unless given as
    ``singular_exponent`` (the exponent of the kernel itself, so that
    ``alpha = 2 * singular_exponent``). When ``grid`` is given, the first cell is
    treated separately and its nodes are used as breakpoints.
    """
    if not t > 0:
        raise DomainError("t must be positive")

    def sq(s):
        v = kernel(s)
        return float(v) * float(v)

    if singular_exponent is None:
        alpha = _local_exponent(sq, t)
        if abs(alpha) < 1e-6:
            alpha = 0.0
    else:
        alpha = 2.0 * float(singular_exponent)
    if alpha <= -1.0:
        raise DomainError(f"kernel^2 ~ s^{alpha:.3f} is not integrable at 0")

    split = t if grid is None else min(grid.h, t)

    def reduced(s):
        return sq(s) / s ** alpha if s > 0 else 0.0

    if alpha == 0.0:
        head = integrate.quad(sq, 0.0, split, epsabs=0.0, epsrel=rtol, limit=400)[0]
    else:
        head = integrate.quad(reduced, 0.0, split, weight="alg", wvar=(alpha, 0.0),
                              epsabs=0.0, epsrel=rtol, limit=400)[0]
    tail = 0.0
    if split < t:
        pts = None
        if grid is not None:
            nodes = grid.nodes
            pts = nodes[(nodes > split) & (nodes < t)][:200]
        tail = integrate.quad(sq, split, t, points=pts, epsabs=0.0, epsrel=rtol, limit=800)[0]
    return head + tail


def left_endpoint_weights(kernel, grid: TimeGrid) -> np.ndarray:
    """``w[m] = kernel(m h)`` for ``m = 1..N`` (``w[0] = 0``)."""
    w = np.zeros(grid.N + 1)
    w[1:] = [kernel(m * grid.h) for m in range(1, grid.N + 1)]
    return w


def stochastic_convolution(weights: np.ndarray, increments: np.ndarray) -> np.ndarray:
    """:math:`X_n = \\sum_{j<n} w_{n-j}\\,\\xi_j`, ``n = 0..N``.

    ``increments`` has the time axis first (length ``N``) and may carry
    further axes, which must broadcast against the trailing axes of
    ``weights`` (length ``N+1`` along axis 0).
    """
    inc = np.asarray(increments)
    N = inc.shape[0]
    w = np.asarray(weights)
    if w.shape[0] != N + 1:
        raise DomainError("weights must have one more entry than the increments")
    w = w[1:]
    if inc.ndim > 1 and w.ndim == 1:
        w = w.reshape((N,) + (1,) * (inc.ndim - 1))
    out_shape = (N + 1,) + np.broadcast_shapes(w.shape[1:], inc.shape[1:])
    out = np.zeros(out_shape, dtype=np.result_type(w, inc))
    if inc.ndim == 1 and w.ndim == 1 and N <= 64:
        full = np.convolve(w, inc)
    else:
        full = signal.fftconvolve(w, inc, axes=0)
    # X_n = sum_{j=0}^{n-1} w_{n-j} xi_j = (w[1:] * xi)[n-1]
    out[1:] = full[:N]
    return out


# }}}
