r"""Sobolev and Bochner norms, Monte Carlo estimates and the checks built on them.

Norms on the torus of side :math:`L` use the coefficient convention of
:class:`~fracspde.spectral_kernels.FourierField`,
:math:`u(x) = \sum_\xi \hat u_\xi e^{i\xi\cdot x}`, so that

.. math::

    \|u\|_{H^\sigma_2}^2 = L^d \sum_\xi (1 + |\xi|^2)^\sigma |\hat u_\xi|^2 .

The squared Bochner norm :math:`\mathbb E\int_0^T\|u(t)\|^2_{H^\sigma_2}\,dt`
is estimated by the trapezoid rule on the nodes of the time grid and by the
sample mean over independent noise substreams.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate, special

from .errors import ConvergenceError, DomainError, SampleFailure
from .frac_calculus import (FracOrders, SampledPath, TimeGrid, _correction_exponents, _integral_weights,
                           fractional_integral,
                           fractional_integral_columns)
from .mild_solver import (ModelProblem, QuasilinearProblem, SolutionPath, _LinearSolver, solve_model,
                          solve_quasilinear)
from .mittag_leffler import mittag_leffler
from .noise import NoiseBasis, NoiseSpec, white_noise_basis
from .spectral_kernels import FourierField, KernelTable, SpatialGrid

__all__ = [
    "NormReport",
    "ProbeRow",
    "ProbeResult",
    "RatioReport",
    "WORKERS_ENV",
    "default_workers",
    "sobolev_norm",
    "sobolev_norm_family",
    "squared_norm_path",
    "mc_estimate",
    "run_samples",
    "regularity_integral",
    "regularity_threshold",
    "regularity_probe",
    "gronwall_bound",
    "volterra_iterate",
    "estimate_ratio",
    "memory_energy",
]

#: environment variable holding the default number of Monte Carlo workers
WORKERS_ENV = "FRACSPDE_WORKERS"


def default_workers() -> int:
    raw = os.environ.get(WORKERS_ENV, "1")
    try:
        n = int(raw)
    except ValueError as exc:
        raise DomainError(f"{WORKERS_ENV} must be an integer, got {raw!r}") from exc
    if n < 1:
        raise DomainError(f"{WORKERS_ENV} must be at least 1")
    return n


# {{{ norms


def _weights(grid: SpatialGrid, sigma: float, homogeneous: bool) -> np.ndarray:
    lam = grid.lam
    if not homogeneous:
        return (1.0 + lam) ** sigma
    w = np.zeros_like(lam)
    pos = lam > 0
    w[pos] = lam[pos] ** sigma
    return w


def sobolev_norm(fld: FourierField, sigma: float, homogeneous: bool = False) -> float:
    r""":math:`\|(1-\Delta)^{\sigma/2}u\|_{L_2}` of a field on the torus.

    With ``homogeneous=True`` the multiplier is :math:`|\xi|^\sigma` and the
    constant mode is dropped (the :math:`\Delta^{\sigma/2}` seminorm).
    """
    c = fld.coefficients
    if not np.all(np.isfinite(c)):
        raise DomainError("field must be finite")
    w = _weights(fld.grid, sigma, homogeneous)
    return float(math.sqrt(fld.grid.volume * np.sum(w * np.abs(c) ** 2)))


def sobolev_norm_family(fields, sigma: float, homogeneous: bool = False) -> float:
    r"""Norm of an :math:`\ell_2`-indexed family: :math:`(\sum_k \|g^k\|^2_{H^\sigma_2})^{1/2}`."""
    return float(math.sqrt(math.fsum(sobolev_norm(f, sigma, homogeneous) ** 2 for f in fields)))


def squared_norm_path(U: np.ndarray, grid: SpatialGrid, sigma: float, homogeneous: bool = False) -> np.ndarray:
    """``||u(t_n)||^2`` in :math:`H^\\sigma_2` for coefficient arrays ``(T, *grid.shape)``."""
    w = _weights(grid, sigma, homogeneous)
    return grid.volume * np.sum(w[None] * np.abs(U) ** 2, axis=tuple(range(1, U.ndim)))


def _time_integral(sq: np.ndarray, tg: TimeGrid) -> float:
    return float(integrate.trapezoid(sq, dx=tg.h))


def _family_sq_bochner(G: np.ndarray | None, grid: SpatialGrid, tg: TimeGrid, sigma: float) -> float:
    if G is None:
        return 0.0
    return math.fsum(_time_integral(squared_norm_path(Gk, grid, sigma), tg) for Gk in G)


# }}}


# {{{ Monte Carlo


@dataclass(frozen=True)
class NormReport:
    r"""Estimate of :math:`\mathbb E\int_0^T \|u\|^2_{H^\sigma_2}\,dt` (a squared norm).

    ``values`` holds the per-sample time integrals in sample order.
    """

    sigma: float
    estimate: float
    stderr: float
    samples: int
    metadata: dict = field(default_factory=dict, compare=False)
    values: tuple = field(default=(), compare=False, repr=False)

    def __post_init__(self):
        if not math.isfinite(self.estimate):
            raise DomainError("estimate must be finite")
        if self.stderr < 0:
            raise DomainError("stderr must be nonnegative")

    @property
    def norm(self) -> float:
        """The Bochner norm itself, the square root of :attr:`estimate`."""
        return math.sqrt(max(self.estimate, 0.0))


def _mean_and_stderr(values) -> tuple:
    """Order-independent mean and standard error (exactly rounded sums)."""
    v = [float(x) for x in values]
    M = len(v)
    mean = math.fsum(v) / M
    var = math.fsum((x - mean) ** 2 for x in v) / (M - 1)
    return mean, math.sqrt(var / M)


def _problem_parts(problem):
    if isinstance(problem, QuasilinearProblem):
        return problem.base, True
    if isinstance(problem, ModelProblem):
        return problem, False
    raise DomainError("problem must be a ModelProblem or a QuasilinearProblem")


def _is_random(problem) -> bool:
    base, quasi = _problem_parts(problem)
    if base.g is not None:
        return True
    return quasi and (problem.coeffs.stochastic_count() > 0 or problem.g_nl is not None)


def run_samples(problem, M: int, workers: int | None = None, first_sample: int = 0, reduce=None):
    """Solve ``M`` substreamed samples and map each solution through ``reduce``.

    Results come back in sample order whatever the number of workers; the
    kernel tables are built once and shared read-only.
    """
    base, quasi = _problem_parts(problem)
    workers = default_workers() if workers is None else int(workers)
    stochastic = _is_random(problem)
    solver = _LinearSolver(base.orders, base.space, base.time_grid, with_stochastic=stochastic)
    seed = None if base.noise is None else base.noise.seed
    reduce = reduce or (lambda s: s)

    def one(m):
        try:
            if quasi:
                sol = solve_quasilinear(problem.with_sample(m), _solver=solver)
            else:
                sol = solve_model(base.with_sample(m), _solver=solver)
            return reduce(sol)
        except Exception as exc:  # recorded with its seed so the sample can be replayed
            raise SampleFailure(m, seed, exc) from exc

    idx = range(first_sample, first_sample + M)
    if workers == 1:
        return [one(m) for m in idx]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(one, idx))


def mc_estimate(problem, sigma: float, M: int, workers: int | None = None, homogeneous: bool = False,
                first_sample: int = 0) -> NormReport:
    r"""Monte Carlo estimate of :math:`\mathbb E\int_0^T\|u(t)\|^2_{H^\sigma_2}\,dt`.

    Samples ``first_sample .. first_sample + M - 1`` use independent
    substreams of the problem's seed. A deterministic problem is solved once
    and reported with zero standard error.
    """
    if int(M) != M or M < 2:
        raise DomainError("M must be an integer of at least 2")
    M = int(M)
    base, _ = _problem_parts(problem)
    tg, grid = base.time_grid, base.space

    def reduce(sol: SolutionPath):
        return _time_integral(squared_norm_path(sol.u, grid, sigma, homogeneous), tg)

    meta = {"d": grid.d, "n": grid.n, "L": grid.L, "N": tg.N, "T": tg.T,
            "seed": None if base.noise is None else base.noise.seed, "homogeneous": homogeneous}
    if not _is_random(problem):
        val = run_samples(problem, 1, 1, first_sample, reduce)[0]
        return NormReport(sigma, val, 0.0, M, meta, (val,) * M)
    vals = run_samples(problem, M, workers, first_sample, reduce)
    mean, se = _mean_and_stderr(vals)
    return NormReport(sigma, mean, se, M, meta, tuple(vals))


def memory_energy(problem, sigma: float, M: int, workers: int | None = None) -> SampledPath:
    r""":math:`(k_{1-\beta} * \mathbb E\|u\|^2_{H^\sigma_2})(t_n)` from ``M`` samples.

    The squared-norm path is averaged over samples and integrated with
    :func:`~fracspde.frac_calculus.fractional_integral` of order
    :math:`1-\beta`.
    """
    base, _ = _problem_parts(problem)
    grid, tg = base.space, base.time_grid
    M = 1 if not _is_random(problem) else int(M)
    paths = run_samples(problem, M, workers, 0, lambda s: squared_norm_path(s.u, grid, sigma))
    mean = np.sum(np.stack(paths), axis=0) / M
    b = base.orders.beta
    exps = tuple(k * b for k in (1, 2, 3) if k * b < 2.0)
    return fractional_integral(1.0 - b, SampledPath(tg, mean, exps))


# }}}


# {{{ regularity threshold


def regularity_threshold(orders: FracOrders) -> float:
    r""":math:`2 \wedge ((1 - 2\gamma)/\beta + 2)`; at :math:`\gamma = 1/2` the bound 2 is not attained."""
    return min(2.0, (1.0 - 2.0 * orders.gamma) / orders.beta + 2.0)


_REG_HEAD_NODES = 24
_REG_TAIL_NODES = 12


def regularity_integral(orders: FracOrders, sigma: float, R: float, xi: float | None = None) -> float:
    r""":math:`\int_0^R r^{-2a}E^2_{\beta,1-a}(-r^\beta)\,dr` with :math:`a = \gamma - \beta`.

    The piece over :math:`[0, \min(R,1)]` is mapped by :math:`r = v^{1/\beta}`
    to a Jacobi-weighted integral of the entire function :math:`E^2(-v)`; the
    rest is integrated in :math:`\ln r` on panels of width at most 1/2, where
    the integrand is smooth. At large :math:`r` the integrand behaves like
    :math:`r^{-2\gamma}`.

    When ``xi`` is given the value is multiplied by the prefactor
    :math:`|\xi|^{2(\sigma + (2a-1)/\beta)}` that accompanies the integral in
    the mode-wise bound; otherwise ``sigma`` does not enter.
    """
    b, g = orders.beta, orders.gamma
    a = g - b
    if 2.0 * a >= 1.0:
        raise DomainError(f"2a = {2 * a:g} >= 1: the integral diverges at 0")
    if not R > 0:
        raise DomainError("R must be positive")
    gm = 1.0 - a
    alpha = (1.0 - 2.0 * a) / b - 1.0
    head_end = min(R, 1.0)
    # int_0^c r^{-2a} E^2(-r^b) dr = (1/b) c^{(1-2a)} int_0^1 v^alpha E^2(-c^b v) dv
    v, wv = special.roots_jacobi(_REG_HEAD_NODES, 0.0, alpha)
    v = 0.5 * (v + 1.0)
    wv = wv * 0.5 ** (alpha + 1.0)
    e = np.asarray(mittag_leffler(b, gm, -(head_end ** b) * v))
    total = head_end ** (1.0 - 2.0 * a) / b * float(wv @ (e * e))
    if R > 1.0:
        span = math.log(R)
        panels = max(1, int(math.ceil(2.0 * span)))
        x, wx = np.polynomial.legendre.leggauss(_REG_TAIL_NODES)
        u = ((np.arange(panels)[:, None] + 0.5 * (x[None, :] + 1.0)) * (span / panels)).ravel()
        r = np.exp(u)
        e = np.asarray(mittag_leffler(b, gm, -(r ** b)))
        f = r ** (1.0 - 2.0 * a) * e * e
        total += 0.5 * span / panels * float(np.sum(f.reshape(panels, -1) @ wx))
    if xi is not None:
        total *= abs(xi) ** (2.0 * (sigma + (2.0 * a - 1.0) / b))
    return total


@dataclass(frozen=True)
class ProbeRow:
    sigma: float
    n: int
    estimate: float
    stderr: float
    ratio: float  # estimate / estimate at the previous level (nan on the first)


@dataclass(frozen=True)
class ProbeResult:
    """Refinement table of the threshold probe and the verdict per ``sigma``.

    ``verdicts[sigma]`` is one of ``"stable"``, ``"growing"`` or ``"boundary"``
    (the expected behavior) and ``passed[sigma]`` tells whether every
    refinement ratio met the contract.
    """

    orders: FracOrders
    threshold: float
    rows: tuple
    verdicts: dict
    passed: dict
    settings: dict = field(default_factory=dict, compare=False)

    @property
    def contract_holds(self) -> bool:
        return all(self.passed[s] for s, v in self.verdicts.items() if v != "boundary")


def _probe_problem(orders: FracOrders, space: SpatialGrid, tg: TimeGrid, seed: int) -> ModelProblem:
    """Zero data and the complete white-noise family :math:`g^k = \\eta^k`."""
    K = space.size
    eta = white_noise_basis(space, K)
    g = [FourierField.from_values(space, e) for e in eta]
    spec = NoiseSpec(K, NoiseBasis.SPACETIME_WHITE, seed)
    return ModelProblem(orders, space, tg, FourierField.zeros(space), None, g, spec)


def _probe_exact(problem: ModelProblem, sigmas) -> dict:
    """Itô-isometry value of the discrete scheme (no sampling)."""
    grid, tg = problem.space, problem.time_grid
    lam, inv = grid.levels
    table = KernelTable(problem.orders, tg, lam)
    var = np.cumsum(table.stoch ** 2, axis=0) * tg.h  # per unit |g_hat|^2, g constant in time
    tint = integrate.trapezoid(var, dx=tg.h, axis=0)[inv]
    G = problem.noise_coefficients()[:, 0]
    power = np.sum(np.abs(G) ** 2, axis=0)
    return {s: float(grid.volume * np.sum(_weights(grid, s, True) * power * tint)) for s in sigmas}


def regularity_probe(orders: FracOrders, sigma_list, levels=(16, 32, 64), M: int = 200, L: float = 2.0 * np.pi,
                     T: float = 1.0, N: int = 100, seed: int = 0, margin: float = 0.25,
                     stable_ratio: float = 1.2, growth_ratio: float = 1.5, method: str = "mc",
                     workers: int | None = None) -> ProbeResult:
    r"""Refinement study of :math:`\mathbb E\int_0^T\|\Delta^{\sigma/2}u\|^2_{L_2}\,dt \,/\, \|g\|^2_{\mathbb L_2(T)}`.

    The solution is driven by the complete truncated white noise on a 1-d
    torus with ``n`` points (every Fourier direction has its own Wiener
    process at equal amplitude). The reported quantity is the ratio bounded
    by the regularity estimate, so it stays bounded under refinement for
    :math:`\sigma` below the threshold :func:`regularity_threshold` and grows
    above it. The contract asks for ratios ``<= stable_ratio`` when
    :math:`\sigma \le` threshold ``- margin`` and ``>= growth_ratio`` when
    :math:`\sigma \ge` threshold ``+ margin``; values in between are only
    reported. ``method="exact"`` replaces sampling by the Itô isometry of the
    discrete scheme.
    """
    if method not in ("mc", "exact"):
        raise DomainError("method must be 'mc' or 'exact'")
    sigmas = [float(s) for s in sigma_list]
    thr = regularity_threshold(orders)
    tg = TimeGrid(T, N)
    rows, prev = [], {}
    for n in levels:
        space = SpatialGrid(1, L, int(n))
        prob = _probe_problem(orders, space, tg, seed)
        g_sq = T * sobolev_norm_family(prob.g, 0.0) ** 2
        if method == "exact":
            est = {s: (v / g_sq, 0.0) for s, v in _probe_exact(prob, sigmas).items()}
        else:
            def reduce(sol, grid=space):
                return [_time_integral(squared_norm_path(sol.u, grid, s, True), tg) for s in sigmas]
            vals = np.array(run_samples(prob, M, workers, 0, reduce))
            est = {}
            for i, s in enumerate(sigmas):
                mean, se = _mean_and_stderr(vals[:, i])
                est[s] = (mean / g_sq, se / g_sq)
        for s in sigmas:
            e, se = est[s]
            ratio = e / prev[s] if s in prev else math.nan
            rows.append(ProbeRow(s, int(n), e, se, ratio))
            prev[s] = e
    verdicts, passed = {}, {}
    for s in sigmas:
        ratios = [r.ratio for r in rows if r.sigma == s and not math.isnan(r.ratio)]
        if s <= thr - margin:
            verdicts[s] = "stable"
            passed[s] = all(r <= stable_ratio for r in ratios)
        elif s >= thr + margin:
            verdicts[s] = "growing"
            passed[s] = all(r >= growth_ratio for r in ratios)
        else:
            verdicts[s] = "boundary"
            passed[s] = True
    settings = {"levels": tuple(levels), "M": M, "L": L, "T": T, "N": N, "seed": seed, "margin": margin,
                "stable_ratio": stable_ratio, "growth_ratio": growth_ratio, "method": method}
    return ProbeResult(orders, thr, tuple(rows), verdicts, passed, settings)


# }}}


# {{{ Gronwall


def _evaluate_a(a, t):
    t = np.asarray(t, dtype=float)
    if isinstance(a, SampledPath):
        if np.any(np.diff(a.values.real) < -1e-14 * max(1.0, float(np.max(np.abs(a.values))))):
            raise DomainError("a must be nondecreasing")
        return np.interp(t, a.nodes, a.values.real)
    a = float(a)
    if a < 0:
        raise DomainError("a must be nonnegative")
    return np.full(t.shape, a)


def gronwall_bound(a, b: float, beta: float, t):
    r""":math:`a(t)\,E_\beta(b\,\Gamma(\beta)\,t^\beta)` for a constant or nondecreasing sampled ``a``."""
    if not b > 0:
        raise DomainError("b must be positive")
    if not (0.0 < beta <= 1.0):
        raise DomainError("beta must lie in (0, 1]")
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise DomainError("t must be nonnegative")
    av = _evaluate_a(a, t)
    out = av * np.asarray(mittag_leffler(beta, 1.0, b * special.gamma(beta) * t ** beta))
    return float(out) if out.ndim == 0 else out


_VOLTERRA_MAX_EXPONENTS = 3
#: below this many steps the starting weights amplify more error than they remove
_VOLTERRA_MIN_CORRECTED_N = 64


def _volterra_exponents(a: SampledPath, beta: float) -> tuple:
    """Powers :math:`s + k\beta` generated by the terms actually present in ``a``."""
    if a.grid.N < _VOLTERRA_MIN_CORRECTED_N:
        return ()
    v = np.asarray(a.values)
    base = tuple(a.singular_exponents)
    if v[0] != 0.0:
        base += (0.0,)
    if np.any(v != v[0]):
        base += (1.0,)
    out = set()
    for s in base:
        for k in range(0, 8):
            e = s + k * beta
            if 0.0 < e < 2.0 and abs(e - round(e)) > 1e-9:
                out.add(round(e, 12))
    # more starting weights make the iteration map unstable near t = 0
    return tuple(sorted(out))[:_VOLTERRA_MAX_EXPONENTS]


def _starting_block(beta: float, grid: TimeGrid, exps: tuple) -> np.ndarray:
    """Rows and columns ``0..m`` of the corrected integration operator.

    The starting weights couple the first ``m`` nodes to each other; every
    later row depends on earlier nodes only.
    """
    m = len(_correction_exponents(exps)) + 2
    if grid.N < 2 * m:
        return np.zeros((1, 1))
    unit = np.zeros((grid.N + 1, m + 1))
    unit[np.arange(m + 1), np.arange(m + 1)] = 1.0
    return fractional_integral_columns(beta, unit, grid, exps)[:m + 1]


def volterra_iterate(a: SampledPath, b: float, beta: float) -> SampledPath:
    r"""Solution of :math:`\eta = a + b\,\Gamma(\beta)\,I^\beta\eta` on the grid of ``a``.

    The operator is the product integration of
    :func:`~fracspde.frac_calculus.fractional_integral`, with the powers
    :math:`s + k\beta` generated by ``a`` declared so that the rule stays
    accurate near 0. Its starting weights tie the first few nodes together;
    that block is solved directly. Every later row involves only earlier
    nodes and itself, so the rest follows by forward substitution, which is
    exact for the discrete system. (Picard iteration on the same system
    diverges numerically once :math:`b\Gamma(\beta)T^\beta` is large.)
    """
    if b < 0:
        raise DomainError("b must be nonnegative")
    if not (0.0 < beta <= 1.0):
        raise DomainError("beta must lie in (0, 1]")
    av = np.asarray(a.values, dtype=float)
    if b == 0:
        return SampledPath(a.grid, av, a.singular_exponents)
    grid = a.grid
    exps = _volterra_exponents(a, beta)
    c = b * special.gamma(beta)
    block = _starting_block(beta, grid, exps)
    nb = block.shape[0]
    eta = np.zeros_like(av)
    eta[:nb] = np.linalg.solve(np.eye(nb) - c * block, av[:nb])
    # contribution of the fixed head to every row, starting weights included
    rhs = av + c * fractional_integral_columns(beta, eta, grid, exps)
    conv = _integral_weights(beta, grid.N, grid.h).conv
    rev = c * conv[1:][::-1]
    diag = 1.0 - c * conv[0]
    N = grid.N
    with np.errstate(over="raise", invalid="raise"):
        try:
            for n in range(nb, N + 1):
                eta[n] = (rhs[n] + rev[N - n + nb:].dot(eta[nb:n])) / diag
        except FloatingPointError as exc:
            raise ConvergenceError("Volterra solution overflowed", []) from exc
    return SampledPath(grid, eta, exps)


# }}}


# {{{ estimate ratios


@dataclass(frozen=True)
class RatioReport:
    """``ratio = numerator / denominator``; ``flag`` is ``""``, ``"zero-data"`` or ``"violation"``."""

    ratio: float
    numerator: float
    denominator: float
    flag: str = ""
    form: str = "model"


def estimate_ratio(problem: ModelProblem, solutions=None, sigma: float = 0.0, M: int = 50,
                   form: str = "model", workers: int | None = None) -> RatioReport:
    r"""Left side over right side of the solvability estimate for ``problem``.

    ``form="model"``:
    :math:`\|u\|_{\mathbb H^{\sigma+2}_2} / (\|u_0\|_{U^{\sigma+1}_2} + \|f\|_{\mathbb H^\sigma_2}
    + \|g\|_{\mathbb H^{\sigma+\sigma_0}_2(\ell_2)})`.

    ``form="divergence"`` (deterministic data entering as the zero-order
    term :math:`h`): :math:`\|u\|^2_{\mathbb H^1_2} / (\|u_0\|^2_{L_2} + \|h\|^2_{\mathbb H^{-1}_2}
    + \|g\|^2_{\mathbb H^{-1+\sigma_0}_2(\ell_2)})`.

    The left side is averaged over ``solutions`` (an ensemble of
    :class:`SolutionPath` for this problem) or over ``M`` fresh samples.
    """
    if form not in ("model", "divergence"):
        raise DomainError("form must be 'model' or 'divergence'")
    grid, tg, orders = problem.space, problem.time_grid, problem.orders
    s_u = sigma + 2.0 if form == "model" else 1.0
    if solutions is None:
        n = M if problem.g is not None else 1
        solutions = run_samples(problem, n, workers)
    lhs_sq = math.fsum(_time_integral(squared_norm_path(s.u, grid, s_u), tg) for s in solutions) / len(solutions)
    F = problem.forcing()
    G = problem.noise_coefficients()
    if form == "model":
        num = math.sqrt(lhs_sq)
        den = (sobolev_norm(problem.u0, sigma + 1.0)
               + (0.0 if F is None else math.sqrt(_time_integral(squared_norm_path(F, grid, sigma), tg)))
               + math.sqrt(_family_sq_bochner(G, grid, tg, sigma + orders.sigma0)))
    else:
        num = lhs_sq
        den = (sobolev_norm(problem.u0, 0.0) ** 2
               + (0.0 if F is None else _time_integral(squared_norm_path(F, grid, -1.0), tg))
               + _family_sq_bochner(G, grid, tg, -1.0 + orders.sigma0))
    if den == 0.0:
        if num == 0.0:
            return RatioReport(0.0, num, den, "zero-data", form)
        return RatioReport(math.inf, num, den, "violation", form)
    return RatioReport(num / den, num, den, "", form)


# }}}
