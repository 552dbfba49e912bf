r"""Mode-by-mode simulation of the linear model equation and its quasi-linear extensions.

The linear model

.. math::

    \partial^\beta_t u = \Delta u + f + \sum_k \partial^\gamma_t \int_0^t g^k\,dW^k_s,
    \qquad u(0) = u_0,

on the torus is solved through its mild representation, one Fourier mode at a
time:

.. math::

    \hat u(t,\xi) = \hat p(t,|\xi|^2)\hat u_0(\xi)
      + \int_0^t \hat q(t-s,|\xi|^2)\hat f(s,\xi)\,ds
      + \sum_k \int_0^t \hat P_{\beta,\gamma}(t-s,|\xi|^2)\hat g^k(s,\xi)\,dW^k_s .

The forcing integral uses product integration (exact against the singular
factor of :math:`\hat q` for piecewise-linear data). The stochastic integral
freezes :math:`g` at the left end of every cell, which keeps the scheme
adapted, and weighs the increment by the root mean square of
:math:`\hat P_{\beta,\gamma}` over the cell, so that the discrete second
moment equals the Itô isometry for the frozen integrand.

Variable coefficients and Lipschitz nonlinearities are handled by Picard
iteration around this solver with the noise realization held fixed.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy import signal

from .errors import ContractError, ConvergenceError, DomainError
from .frac_calculus import FracOrders, TimeGrid, fractional_integral_columns
from .noise import (NoiseBasis, NoiseRealization, NoiseSpec, sample_wiener,
                    stochastic_convolution, white_noise_basis)
from .spectral_kernels import FourierField, KernelTable, SpatialGrid

__all__ = [
    "ModelProblem",
    "CoefficientSet",
    "SolutionPath",
    "Violation",
    "OrderReport",
    "Form",
    "Nonlinearity",
    "QuasilinearProblem",
    "validate_orders",
    "solve_model",
    "solve_quasilinear",
    "residual_distributional",
    "white_noise_sources",
    "bochner_norm",
]

DEFAULT_TOL = 1e-8
DEFAULT_MAX_ITERS = 50


# {{{ data normalization


def _as_time_field(data, grid: SpatialGrid, tgrid: TimeGrid, name: str):
    """Coefficients of time-indexed data as an array ``(N+1, *grid.shape)``.

    ``data`` may be ``None``, a :class:`FourierField` (constant in time), an
    array of that shape or a callable ``t -> FourierField``.
    """
    shape = (tgrid.N + 1,) + grid.shape
    if data is None:
        return None
    if isinstance(data, FourierField):
        if data.grid != grid:
            raise DomainError(f"{name} lives on a different spatial grid")
        return np.broadcast_to(data.coefficients, shape)
    if callable(data):
        out = np.empty(shape, dtype=complex)
        for n, t in enumerate(tgrid.nodes):
            fld = data(float(t))
            if not isinstance(fld, FourierField) or fld.grid != grid:
                raise DomainError(f"{name}(t) must return a FourierField on the problem grid")
            out[n] = fld.coefficients
        return out
    arr = np.asarray(data, dtype=complex)
    if arr.shape != shape:
        raise DomainError(f"{name} must have shape {shape}, got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise DomainError(f"{name} must be finite")
    return arr


def white_noise_sources(spec: NoiseSpec, grid: SpatialGrid, h_field: FourierField) -> list:
    r"""Noise coefficients :math:`g^k = h\,\eta^k` for a truncated space-time white noise."""
    if spec.basis is not NoiseBasis.SPACETIME_WHITE:
        raise DomainError("white_noise_sources needs a SPACETIME_WHITE spec")
    if h_field.grid != grid:
        raise DomainError("h_field lives on a different grid")
    eta = white_noise_basis(grid, spec.K)
    hv = h_field.values()
    return [FourierField.from_values(grid, hv * e) for e in eta]


# }}}


# {{{ problem and solution types


@dataclass(frozen=True)
class ModelProblem:
    """Data of the linear model equation on ``time_grid x space``.

    ``f`` is deterministic forcing; ``g`` holds one entry per Wiener process
    (``len(g) == noise.K``). Both accept the forms described in
    :func:`_as_time_field`. ``sample_index`` selects the Monte Carlo substream.
    """

    orders: FracOrders
    space: SpatialGrid
    time_grid: TimeGrid
    u0: FourierField
    f: object = None
    g: Sequence | None = None
    noise: NoiseSpec | None = None
    sample_index: int = 0

    def __post_init__(self):
        if self.u0.grid != self.space:
            raise DomainError("u0 lives on a different spatial grid")
        if self.g is not None:
            if self.noise is None:
                raise DomainError("a noise coefficient g needs a NoiseSpec")
            if len(self.g) != self.noise.K:
                raise DomainError(f"g has {len(self.g)} entries but the noise has K = {self.noise.K}")
            object.__setattr__(self, "g", tuple(self.g))

    def forcing(self):
        return _as_time_field(self.f, self.space, self.time_grid, "f")

    def noise_coefficients(self):
        if self.g is None:
            return None
        parts = [_as_time_field(gk, self.space, self.time_grid, f"g[{k}]") for k, gk in enumerate(self.g)]
        return np.stack([np.zeros((self.time_grid.N + 1,) + self.space.shape, complex) if p is None else p
                         for p in parts])

    def with_sample(self, sample_index: int) -> "ModelProblem":
        return ModelProblem(self.orders, self.space, self.time_grid, self.u0, self.f, self.g,
                            self.noise, int(sample_index))

    def scaled(self, alpha: float, u0: bool = True, f: bool = True, g: bool = True) -> "ModelProblem":
        """The problem with the selected data multiplied by ``alpha``."""
        fa = self.forcing()
        ga = self.noise_coefficients()
        return ModelProblem(
            self.orders, self.space, self.time_grid,
            self.u0.scaled(alpha) if u0 else self.u0,
            None if fa is None else (alpha * fa if f else fa),
            None if ga is None else tuple(alpha * ga if g else ga),
            self.noise, self.sample_index,
        )


@dataclass(frozen=True)
class SolutionPath:
    r"""Coefficients of :math:`u`, :math:`\mathbb D u` and :math:`\mathbb S u` at every time node.

    ``u`` and ``du`` have shape ``(N+1, *space.shape)``; ``su`` has shape
    ``(K, N+1, *space.shape)`` and is ``None`` exactly when the noise
    coefficient vanishes.
    """

    orders: FracOrders
    space: SpatialGrid
    time_grid: TimeGrid
    u: np.ndarray
    du: np.ndarray | None
    su: np.ndarray | None
    realization: NoiseRealization | None = None
    history: tuple = ()
    metadata: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        shape = (self.time_grid.N + 1,) + self.space.shape
        if self.u.shape != shape:
            raise DomainError(f"u must have shape {shape}")
        if self.du is not None and self.du.shape != shape:
            raise DomainError(f"du must have shape {shape}")
        if self.su is not None:
            if self.su.shape[1:] != shape:
                raise DomainError("su must have shape (K, N+1, *space.shape)")
            if self.realization is None or self.realization.spec.K != self.su.shape[0]:
                raise DomainError("su needs a noise realization with matching K")
        for a in (self.u, self.du, self.su):
            if a is not None:
                a.flags.writeable = False

    def field(self, n: int) -> FourierField:
        return FourierField(self.space, self.u[n])

    def mode(self, k) -> np.ndarray:
        """Time series :math:`\\hat u(t_n, \\xi)` of the integer mode ``k``."""
        return self.u[(slice(None),) + self.space.mode_index(k)]

    @property
    def seed(self):
        return None if self.realization is None else self.realization.spec.seed


# }}}


# {{{ order and coefficient validation


@dataclass(frozen=True)
class Violation:
    code: str
    message: str


@dataclass(frozen=True)
class OrderReport:
    """Outcome of :func:`validate_orders`. ``notes`` carry non-blocking facts."""

    orders: FracOrders
    violations: tuple = ()
    notes: tuple = ()

    @property
    def accepted(self) -> bool:
        return not self.violations

    def __str__(self):
        head = "accepted" if self.accepted else "rejected"
        lines = [f"orders beta={self.orders.beta}, gamma={self.orders.gamma}: {head}"]
        lines += [f"  violation [{v.code}]: {v.message}" for v in self.violations]
        lines += [f"  note: {n}" for n in self.notes]
        return "\n".join(lines)


def _as_grid_values(v, grid: SpatialGrid, name: str) -> np.ndarray:
    arr = np.asarray(v, dtype=float)
    if arr.ndim == 0:
        return np.full(grid.shape, float(arr))
    if arr.shape != grid.shape:
        raise DomainError(f"coefficient {name} must be a constant or have shape {grid.shape}")
    if not np.all(np.isfinite(arr)):
        raise DomainError(f"coefficient {name} must be finite")
    return arr


@dataclass(frozen=True)
class CoefficientSet:
    r"""Variable coefficients of the quasi-linear equations, as real grid values.

    ``a`` is ``d x d``, ``b`` has ``d`` entries, ``sigma`` is ``K x d x d``,
    ``mu`` is ``K x d`` and ``nu`` has ``K`` entries; every entry is a
    constant or an array of grid values. ``K`` is fixed by the noise of the
    problem the set is used with; empty ``sigma``/``mu``/``nu`` mean zero.

    ``delta`` and ``K1`` are the ellipticity and size bounds; ``kappa0`` is
    the asserted smallness of the second-order stochastic coefficients, which
    has no computable value and is only recorded.
    """

    space: SpatialGrid
    a: object = None
    b: object = None
    c: object = 0.0
    sigma: object = ()
    mu: object = ()
    nu: object = ()
    delta: float = 0.5
    K1: float = 10.0
    kappa0: float | None = None

    def __post_init__(self):
        d, grid = self.space.d, self.space
        a = np.eye(d) if self.a is None else self.a
        a = np.stack([np.stack([_as_grid_values(a[i][j], grid, f"a[{i}][{j}]") for j in range(d)])
                      for i in range(d)])
        b = [0.0] * d if self.b is None else self.b
        if len(b) != d:
            raise DomainError(f"b needs {d} entries")
        b = np.stack([_as_grid_values(bi, grid, f"b[{i}]") for i, bi in enumerate(b)])
        c = _as_grid_values(self.c, grid, "c")
        sig = [np.stack([np.stack([_as_grid_values(sk[i][j], grid, f"sigma[{k}][{i}][{j}]")
                                   for j in range(d)]) for i in range(d)])
               for k, sk in enumerate(self.sigma)]
        mu = [np.stack([_as_grid_values(mk[i], grid, f"mu[{k}][{i}]") for i in range(d)])
              for k, mk in enumerate(self.mu)]
        nu = [_as_grid_values(v, grid, f"nu[{k}]") for k, v in enumerate(self.nu)]
        if not (self.delta > 0 and self.K1 > 0):
            raise DomainError("delta and K1 must be positive")
        for name, val in (("a", a), ("b", b), ("c", c)):
            val.flags.writeable = False
            object.__setattr__(self, name, val)
        for name, val in (("sigma", sig), ("mu", mu), ("nu", nu)):
            arr = np.stack(val) if val else None
            if arr is not None:
                arr.flags.writeable = False
            object.__setattr__(self, name, arr)

    @property
    def has_sigma(self) -> bool:
        return self.sigma is not None and bool(np.any(self.sigma != 0.0))

    @property
    def has_mu(self) -> bool:
        return self.mu is not None and bool(np.any(self.mu != 0.0))

    @property
    def has_nu(self) -> bool:
        return self.nu is not None and bool(np.any(self.nu != 0.0))

    def stochastic_count(self) -> int:
        counts = {len(x) for x in (self.sigma, self.mu, self.nu) if x is not None}
        if len(counts) > 1:
            raise DomainError("sigma, mu and nu must have the same number of noise channels")
        return counts.pop() if counts else 0

    def is_identity(self) -> bool:
        """True when the coefficients reduce to the pure Laplacian without noise feedback."""
        eye = np.eye(self.space.d).reshape((self.space.d, self.space.d) + (1,) * self.space.d)
        return (np.array_equal(self.a, np.broadcast_to(eye, self.a.shape)) and not np.any(self.b)
                and not np.any(self.c) and not (self.has_sigma or self.has_mu or self.has_nu))

    def ellipticity_range(self) -> tuple:
        """Smallest and largest eigenvalue of the symmetric part of ``a`` over the grid."""
        d = self.space.d
        mat = np.moveaxis(self.a.reshape(d, d, -1), -1, 0)
        ev = np.linalg.eigvalsh(0.5 * (mat + np.swapaxes(mat, 1, 2)))
        return float(ev.min()), float(ev.max())

    def size_bound(self) -> float:
        r""":math:`\max_x |b^i| + |c| + |\sigma^{ij}|_{\ell_2} + |\mu^i|_{\ell_2} + |\nu|_{\ell_2}`."""
        total = np.abs(self.b).max(axis=0) + np.abs(self.c)
        if self.sigma is not None:
            total = total + np.sqrt(np.sum(self.sigma ** 2, axis=0)).max(axis=(0, 1))
        if self.mu is not None:
            total = total + np.sqrt(np.sum(self.mu ** 2, axis=0)).max(axis=0)
        if self.nu is not None:
            total = total + np.sqrt(np.sum(self.nu ** 2, axis=0))
        return float(total.max())


def validate_orders(orders: FracOrders, coeffs: CoefficientSet | None = None,
                    white_noise: bool = False) -> OrderReport:
    r"""Check the order constraints and, if given, the coefficient assumptions.

    Always checked: :math:`\gamma < \beta + 1/2`. With ``coeffs``: the
    ellipticity and size bounds on the grid, :math:`\sigma^{ijk} = 0` when
    :math:`\gamma \ge 1/2` and :math:`\mu^{ik} = 0` when
    :math:`\gamma \ge 1/2 + \beta/2`. With ``white_noise``: existence of
    :math:`\sigma` with :math:`\sigma + \sigma_0 < -1/2` and :math:`\sigma + 2 > 0`,
    i.e. :math:`\sigma_0 < 3/2`, which for :math:`\gamma > 1/2` reads
    :math:`\gamma < 1/2 + 3\beta/4`.

    Never raises; every failed condition becomes a :class:`Violation`.
    """
    b, g = orders.beta, orders.gamma
    bad, notes = [], []
    if not orders.satisfies_constraint:
        bad.append(Violation(
            "order-constraint",
            f"gamma < beta + 1/2 fails: gamma = {g} >= beta + 1/2 = {b + 0.5:g}",
        ))
    if coeffs is not None:
        lo, hi = coeffs.ellipticity_range()
        if lo < coeffs.delta * (1.0 - 1e-12):
            bad.append(Violation("ellipticity", f"delta |xi|^2 <= a^ij xi_i xi_j fails: smallest eigenvalue "
                                                f"{lo:.6g} < delta = {coeffs.delta:g}"))
        if hi > coeffs.K1 * (1.0 + 1e-12):
            bad.append(Violation("ellipticity", f"a^ij xi_i xi_j <= K1 |xi|^2 fails: largest eigenvalue "
                                                f"{hi:.6g} > K1 = {coeffs.K1:g}"))
        size = coeffs.size_bound()
        if size > coeffs.K1 * (1.0 + 1e-12):
            bad.append(Violation("coefficient-bound", f"|b|+|c|+|sigma|+|mu|+|nu| reaches {size:.6g} > K1 = {coeffs.K1:g}"))
        if coeffs.has_sigma and g >= 0.5:
            bad.append(Violation(
                "sigma-gate",
                f"second-order stochastic coefficients sigma^ijk must vanish when gamma >= 1/2 (gamma = {g})",
            ))
        if coeffs.has_mu and g >= 0.5 + 0.5 * b:
            bad.append(Violation(
                "mu-gate",
                f"first-order stochastic coefficients mu^ik must vanish when gamma >= 1/2 + beta/2 = {0.5 + 0.5 * b:g}",
            ))
        if coeffs.has_sigma:
            notes.append("smallness of sigma^ijk in C^1 is asserted by the user"
                         + ("" if coeffs.kappa0 is None else f" (kappa0 = {coeffs.kappa0:g})"))
    if white_noise:
        bound = 0.5 + 0.75 * b
        s0 = orders.sigma0
        if s0 < 1.5:
            notes.append(f"white noise feasible: gamma = {g} < 1/2 + 3 beta/4 = {bound:g}; "
                         f"admissible sigma in ({-2.0:g}, {-0.5 - s0:g})")
        else:
            bad.append(Violation(
                "white-noise",
                f"sigma + sigma0 < -1/2 and sigma + 2 > 0 have no solution: need gamma < 1/2 + 3 beta/4 = {bound:g}, "
                f"got gamma = {g}",
            ))
        if coeffs is not None and coeffs.space.d != 1:
            notes.append("the white-noise estimate is stated for dimension 1")
    return OrderReport(orders, tuple(bad), tuple(notes))


# }}}


# {{{ linear solver core


def _convolve_time(weights: np.ndarray, data: np.ndarray) -> np.ndarray:
    """``y_n = sum_{j<=n} w_{n-j} x_j`` along axis 0, per mode."""
    n = data.shape[0]
    return signal.fftconvolve(weights[:n], data, axes=0)[:n]


class _LinearSolver:
    """Kernel tables and level maps for repeated solves on fixed grids."""

    def __init__(self, orders: FracOrders, space: SpatialGrid, time_grid: TimeGrid,
                 stochastic_rule: str = "rms", with_stochastic: bool = True):
        report = validate_orders(orders)
        if not report.accepted:
            raise DomainError(str(report))
        self.orders, self.space, self.time_grid = orders, space, time_grid
        lam, inv = space.levels
        self.lam_modes = space.lam
        self.table = KernelTable(orders, time_grid, lam, stochastic_rule, with_stochastic)
        self.inv = inv

    def expand(self, rows: np.ndarray) -> np.ndarray:
        return rows[:, self.inv]

    def solve(self, u0: np.ndarray, F: np.ndarray | None, increments: np.ndarray | None) -> np.ndarray:
        """``u0`` coefficients, forcing ``F`` (N+1 rows) and summed noise ``increments`` (N rows)."""
        t = self.table
        u = self.expand(t.p) * u0[None]
        if F is not None:
            forced = _convolve_time(self.expand(t.q_conv), F) + self.expand(t.q_first) * F[0][None]
            forced[0] = 0.0
            u = u + forced
        if increments is not None:
            u = u + stochastic_convolution(self.expand(t.stoch), increments)
        return u


def _noise_sum(G: np.ndarray, realization: NoiseRealization) -> np.ndarray:
    r""":math:`\sum_k \hat g^k(t_j)\,\Delta W^k_j` for ``j = 0..N-1``."""
    dW = realization.increments
    return np.einsum("kj...,kj->j...", G[:, :-1], dW)


def _realization(spec: NoiseSpec, time_grid: TimeGrid, sample_index: int, given):
    if given is not None:
        if given.spec != spec or given.grid != time_grid:
            raise DomainError("the supplied realization does not match the problem noise and time grid")
        return given
    return sample_wiener(spec, time_grid, sample_index)


def solve_model(problem: ModelProblem, realization: NoiseRealization | None = None,
                stochastic_rule: str = "rms", _solver: _LinearSolver | None = None) -> SolutionPath:
    """Mild solution of the linear model equation on the problem grids.

    ``realization`` overrides the noise drawn from ``problem.noise`` and
    ``problem.sample_index``. ``stochastic_rule="left"`` weighs increments by
    :math:`\\hat P_{\\beta,\\gamma}` at the cell's far end instead of the cell RMS.
    """
    G = problem.noise_coefficients()
    solver = _solver or _LinearSolver(problem.orders, problem.space, problem.time_grid, stochastic_rule,
                                      with_stochastic=G is not None)
    F = problem.forcing()
    real, inc = None, None
    if G is not None:
        real = _realization(problem.noise, problem.time_grid, problem.sample_index, realization)
        inc = _noise_sum(G, real)
    u = solver.solve(problem.u0.coefficients, F, inc)
    du = -solver.lam_modes[None] * u
    if F is not None:
        du = du + F
    meta = {"seed": None if real is None else real.spec.seed, "sample_index": problem.sample_index,
            "stochastic_rule": stochastic_rule}
    return SolutionPath(problem.orders, problem.space, problem.time_grid, u, du,
                        None if G is None else np.array(G), real, (), meta)


# }}}


# {{{ quasi-linear equations


class Form(enum.Enum):
    DIVERGENCE = "divergence"
    NONDIVERGENCE = "nondivergence"


_NONLINEAR_KINDS = ("linear", "sin", "sup")


@dataclass(frozen=True)
class Nonlinearity:
    r"""A Lipschitz nonlinearity from a fixed catalog, applied pointwise on the grid.

    ``"linear"``: :math:`\lambda\,\rho(x)\,u`; ``"sin"``: :math:`\lambda\,\rho(x)\sin u`;
    ``"sup"``: :math:`\lambda\,\rho(x)\sup_x |u|` (the truncated-sup example).
    ``profile`` is :math:`\rho` (constant 1 when omitted). ``modes``, when
    given, projects the output onto those integer wave vectors and their
    negatives.
    """

    kind: str
    lam: float = 1.0
    profile: object = None
    modes: tuple | None = None

    def __post_init__(self):
        if self.kind not in _NONLINEAR_KINDS:
            raise DomainError(f"unknown nonlinearity {self.kind!r}; choose from {_NONLINEAR_KINDS}")
        if not math.isfinite(self.lam):
            raise DomainError("lam must be finite")
        if self.modes is not None:
            object.__setattr__(self, "modes", tuple(tuple(np.atleast_1d(m).tolist()) for m in self.modes))

    def _profile(self, grid: SpatialGrid) -> np.ndarray:
        if self.profile is None:
            return np.ones(grid.shape)
        return _as_grid_values(self.profile, grid, "profile")

    def lipschitz(self, grid: SpatialGrid) -> float:
        """Lipschitz constant in :math:`L_2` (in the sup norm of ``u`` for ``"sup"``)."""
        rho = self._profile(grid)
        if self.kind == "sup":
            return abs(self.lam) * math.sqrt(grid.cell_volume * float(np.sum(rho ** 2)))
        return abs(self.lam) * float(np.max(np.abs(rho)))

    def apply(self, values: np.ndarray, grid: SpatialGrid) -> np.ndarray:
        """Coefficients of the output for grid values of shape ``(T, *grid.shape)``."""
        rho = self._profile(grid)
        axes = tuple(range(1, values.ndim))
        if self.kind == "linear":
            out = self.lam * rho * values
        elif self.kind == "sin":
            out = self.lam * rho * np.sin(values)
        else:
            sup = np.max(np.abs(values), axis=axes, keepdims=True)
            out = self.lam * rho * sup
        coef = np.fft.fftn(out, axes=axes) / grid.size
        if self.modes is not None:
            keep = np.zeros(grid.shape, dtype=bool)
            for m in self.modes:
                keep[grid.mode_index(m)] = True
                keep[grid.mode_index(tuple(-v for v in m))] = True
            coef = coef * keep
        return coef


@dataclass(frozen=True)
class QuasilinearProblem:
    r"""Variable-coefficient equation built on the data of a :class:`ModelProblem`.

    Non-divergence drift: :math:`a^{ij}u_{x^ix^j} + b^iu_{x^i} + cu + f(u)`.
    Divergence drift: :math:`D_i[a^{ij}u_{x^j} + b^iu + f^i(u)] + cu + h(u)`,
    where ``f_nl`` plays :math:`h` and ``flux_nl`` holds the :math:`f^i`.
    Diffusion in both forms: :math:`\sigma^{ijk}u_{x^ix^j} + \mu^{ik}u_{x^i} + \nu^ku + g^k(u)`.
    The deterministic ``f`` and ``g`` of ``base`` are added to the drift and diffusion.
    """

    base: ModelProblem
    coeffs: CoefficientSet
    form: Form = Form.NONDIVERGENCE
    f_nl: Nonlinearity | None = None
    flux_nl: tuple | None = None
    g_nl: tuple | None = None
    tol: float = DEFAULT_TOL
    max_iters: int = DEFAULT_MAX_ITERS
    distance_sigma: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "form", Form(self.form))
        if self.coeffs.space != self.base.space:
            raise DomainError("coefficients live on a different grid")
        K = self.noise_channels
        kc = self.coeffs.stochastic_count()
        if kc not in (0, K):
            raise DomainError(f"stochastic coefficients have {kc} channels, the noise has {K}")
        if self.g_nl is not None and len(self.g_nl) != K:
            raise DomainError(f"g_nl needs {K} entries")
        if self.flux_nl is not None:
            if self.form is not Form.DIVERGENCE:
                raise DomainError("flux nonlinearities need the divergence form")
            if len(self.flux_nl) != self.base.space.d:
                raise DomainError(f"flux_nl needs {self.base.space.d} entries")
        if not (self.tol > 0 and self.max_iters >= 1):
            raise DomainError("tol must be positive and max_iters at least 1")

    def with_sample(self, sample_index: int) -> "QuasilinearProblem":
        return QuasilinearProblem(self.base.with_sample(sample_index), self.coeffs, self.form, self.f_nl,
                                  self.flux_nl, self.g_nl, self.tol, self.max_iters, self.distance_sigma)

    @property
    def noise_channels(self) -> int:
        return 0 if self.base.noise is None else self.base.noise.K

    def is_constant_map(self) -> bool:
        c = self.coeffs
        if not c.is_identity():
            return False
        nl = [self.f_nl] + list(self.flux_nl or ()) + list(self.g_nl or ())
        return all(x is None for x in nl)


class _Operators:
    """Derivatives in mode space and products in grid space for a fixed grid."""

    def __init__(self, space: SpatialGrid):
        self.space = space
        self.xi = space.wavenumbers
        self.axes = None

    def to_values(self, U):
        axes = tuple(range(1, U.ndim))
        return np.real(np.fft.ifftn(U, axes=axes)) * self.space.size

    def to_coef(self, V):
        axes = tuple(range(1, V.ndim))
        return np.fft.fftn(V, axes=axes) / self.space.size

    def grad(self, U):
        return [1j * x[None] * U for x in self.xi]

    def hessian(self, U):
        d = self.space.d
        return [[-(self.xi[i] * self.xi[j])[None] * U for j in range(d)] for i in range(d)]


def _sources(prob: QuasilinearProblem, ops: _Operators, U, F0, G0):
    """Frozen drift and diffusion coefficients built from the iterate ``U``."""
    c, d = prob.coeffs, prob.base.space.d
    grid = prob.base.space
    Uv = ops.to_values(U)
    gradv = [ops.to_values(x) for x in ops.grad(U)]
    eye = np.eye(d)
    need_hess = prob.form is Form.NONDIVERGENCE or c.has_sigma
    hessv = [[ops.to_values(x) for x in row] for row in ops.hessian(U)] if need_hess else None

    if prob.form is Form.NONDIVERGENCE:
        drift_v = c.c * Uv
        for i in range(d):
            drift_v = drift_v + c.b[i] * gradv[i]
            for j in range(d):
                aij = c.a[i, j] - eye[i, j]
                if np.any(aij):
                    drift_v = drift_v + aij * hessv[i][j]
        drift = ops.to_coef(drift_v)
        if prob.f_nl is not None:
            drift = drift + prob.f_nl.apply(Uv, grid)
    else:
        drift = ops.to_coef(c.c * Uv)
        for i in range(d):
            flux_v = c.b[i] * Uv
            for j in range(d):
                aij = c.a[i, j] - eye[i, j]
                if np.any(aij):
                    flux_v = flux_v + aij * gradv[j]
            flux = ops.to_coef(flux_v)
            if prob.flux_nl is not None and prob.flux_nl[i] is not None:
                flux = flux + prob.flux_nl[i].apply(Uv, grid)
            drift = drift + 1j * ops.xi[i][None] * flux
        if prob.f_nl is not None:
            drift = drift + prob.f_nl.apply(Uv, grid)
    F = drift if F0 is None else F0 + drift

    K = prob.noise_channels
    if K == 0:
        return F, None
    G = np.zeros((K,) + U.shape, dtype=complex) if G0 is None else np.array(G0)
    for k in range(K):
        gv = np.zeros_like(Uv)
        touched = False
        if c.nu is not None and np.any(c.nu[k]):
            gv = gv + c.nu[k] * Uv
            touched = True
        if c.mu is not None:
            for i in range(d):
                if np.any(c.mu[k, i]):
                    gv = gv + c.mu[k, i] * gradv[i]
                    touched = True
        if c.sigma is not None:
            for i in range(d):
                for j in range(d):
                    if np.any(c.sigma[k, i, j]):
                        gv = gv + c.sigma[k, i, j] * hessv[i][j]
                        touched = True
        if touched:
            G[k] = G[k] + ops.to_coef(gv)
        if prob.g_nl is not None and prob.g_nl[k] is not None:
            G[k] = G[k] + prob.g_nl[k].apply(Uv, grid)
    return F, G


def bochner_norm(U: np.ndarray, space: SpatialGrid, time_grid: TimeGrid, sigma: float = 0.0) -> float:
    r""":math:`(\int_0^T \|u(t)\|^2_{H^\sigma_2}\,dt)^{1/2}` of one path, trapezoid in time."""
    w = (1.0 + space.lam) ** sigma
    sq = space.volume * np.sum(w[None] * np.abs(U) ** 2, axis=tuple(range(1, U.ndim)))
    return float(math.sqrt(max(np.trapezoid(sq, dx=time_grid.h), 0.0)))


def solve_quasilinear(prob: QuasilinearProblem, realization: NoiseRealization | None = None,
                      stochastic_rule: str = "rms", _solver: _LinearSolver | None = None) -> SolutionPath:
    r"""Picard iteration :math:`u_{m+1} = \mathcal R(u_m)` around :func:`solve_model`.

    :math:`\mathcal R(v)` solves the model equation with the Laplacian as the
    principal part and every remaining term evaluated at :math:`v`; the noise
    realization is drawn once and shared by all iterates. The iteration
    starts from :math:`\mathcal R(0)` and stops once the relative
    :math:`\mathbb H^{s}_2` distance of successive iterates,
    ``s = prob.distance_sigma``, drops below ``prob.tol``. The distances are
    returned in :attr:`SolutionPath.history`. A map that does not depend on
    its argument returns after the single solve.

    Raises :class:`ConvergenceError` (with the distance history) when
    ``max_iters`` is exhausted, and :class:`DomainError` when the orders or
    the coefficient assumptions fail.
    """
    base = prob.base
    report = validate_orders(base.orders, prob.coeffs)
    if not report.accepted:
        raise DomainError(str(report))
    G0 = base.noise_coefficients()
    K = prob.noise_channels
    stochastic = G0 is not None or prob.coeffs.stochastic_count() > 0 or prob.g_nl is not None
    solver = _solver or _LinearSolver(base.orders, base.space, base.time_grid, stochastic_rule,
                                      with_stochastic=stochastic)
    real = _realization(base.noise, base.time_grid, base.sample_index, realization) if stochastic else None
    ops = _Operators(base.space)
    F0 = base.forcing()
    if F0 is not None:
        F0 = np.array(F0)
    u0 = base.u0.coefficients

    def run(F, G):
        return solver.solve(u0, F, None if G is None else _noise_sum(G, real))

    F, G = F0, (G0 if stochastic and G0 is not None else (np.zeros((K, base.time_grid.N + 1) + base.space.shape, complex)
                                                        if stochastic else None))
    U = run(F, G)
    history = []
    if not prob.is_constant_map():
        for _ in range(prob.max_iters):
            F, G = _sources(prob, ops, U, F0, G0)
            U_new = run(F, G)
            if not np.all(np.isfinite(U_new)):
                raise ConvergenceError("Picard iterates became non-finite", history)
            num = bochner_norm(U_new - U, base.space, base.time_grid, prob.distance_sigma)
            den = bochner_norm(U_new, base.space, base.time_grid, prob.distance_sigma)
            history.append(num / den if den > 0 else num)
            U = U_new
            if history[-1] < prob.tol:
                break
        else:
            raise ConvergenceError(
                f"no convergence to {prob.tol:g} within {prob.max_iters} iterations "
                f"(last distance {history[-1]:.3e})", history)
    du = -solver.lam_modes[None] * U + (0.0 if F is None else F)
    meta = {"seed": None if real is None else real.spec.seed, "sample_index": base.sample_index,
            "form": prob.form.value, "iterations": max(1, len(history)),
            "stochastic_rule": stochastic_rule}
    return SolutionPath(base.orders, base.space, base.time_grid, U, du, G, real, tuple(history), meta)


# }}}


# {{{ distributional residual


def residual_distributional(path: SolutionPath, test_modes, singular_exponents=None) -> float:
    r"""Mismatch of the weak form of the equation, tested against Fourier modes.

    For every test mode :math:`\xi` (test function :math:`e^{i\xi x}/L^{d/2}`)
    and node :math:`t_n` the left side
    :math:`I^{1-\beta}(\hat u - \hat u_0)(t_n)` is compared with
    :math:`\int_0^{t_n} \widehat{\mathbb D u}\,ds + I^{1-\gamma}\big(\sum_k\int_0^\cdot
    \widehat{\mathbb S u}^k\,dW^k\big)(t_n)`, the stochastic integral being the
    left-point Itô sum. Returns the largest mismatch divided by the
    :math:`\mathbb H^0_2` norm of :math:`u` (0 for an identically zero path).

    ``singular_exponents`` declares the powers of :math:`t` present at the
    origin; the default :math:`\beta, 2\beta, 3\beta` fits smooth data.
    """
    if path.du is None:
        raise ContractError("the path carries no drift part du")
    if path.su is not None and path.realization is None:
        raise ContractError("the stochastic part needs its noise realization")
    b, g = path.orders.beta, path.orders.gamma
    tg, grid = path.time_grid, path.space
    if singular_exponents is None:
        singular_exponents = tuple(k * b for k in (1, 2, 3) if k * b < 2.0)
    idx = [grid.mode_index(m) for m in test_modes]
    if not idx:
        raise DomainError("at least one test mode is needed")
    sel = tuple(np.array(a) for a in zip(*idx))

    u = path.u[(slice(None),) + sel]
    left = fractional_integral_columns(1.0 - b, u - u[0][None], tg, singular_exponents)
    right = fractional_integral_columns(1.0, path.du[(slice(None),) + sel], tg, singular_exponents)
    if path.su is not None:
        G = path.su[(slice(None), slice(None)) + sel]
        M = np.zeros_like(u)
        M[1:] = np.cumsum(_noise_sum(G, path.realization), axis=0)
        right = right + fractional_integral_columns(1.0 - g, M, tg)
    mismatch = math.sqrt(grid.volume) * float(np.max(np.abs(left - right)))
    scale = bochner_norm(path.u, grid, tg)
    if scale == 0.0:
        return 0.0 if mismatch == 0.0 else math.inf
    return mismatch / scale


# }}}
