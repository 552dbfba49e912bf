"""Command-line front end: ``fracspde <subcommand> [config] [--key value ...]``.

A configuration file is plain ``key = value`` lines (``#`` starts a comment)
holding the parameters of one subcommand. Flags override the file, the file
overrides the defaults. Every value is checked against the subcommand schema
before anything is computed; an unknown key or a bad value exits with
status 1 and names the failing key path, e.g. ``regularity-probe.levels[2]``.

Exit status: 0 on success, 1 on invalid input or rejected orders, 2 when a
numerical contract fails (Itô check outside the tolerance, probe
contradiction, iterate above the Gronwall bound).
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import math
import os
import re
import sys
from dataclasses import dataclass

import numpy as np

from . import __version__
from .errors import FracSPDEError
from .frac_calculus import FracOrders, SampledPath, TimeGrid
from .mild_solver import CoefficientSet, ModelProblem, solve_model, validate_orders
from .mittag_leffler import mittag_leffler
from .noise import NoiseBasis, NoiseSpec, ito_isometry_oracle, white_noise_basis
from .norm_estimator import (default_workers, gronwall_bound, regularity_probe, run_samples, sobolev_norm,
                             volterra_iterate)
from .spectral_kernels import FourierField, KernelKind, SpatialGrid, kernel_symbol

__all__ = ["run", "main", "ConfigError", "SCHEMA_VERSION", "SCHEMAS", "parse_config_text"]

SCHEMA_VERSION = 1

EXIT_OK, EXIT_INVALID, EXIT_CONTRACT = 0, 1, 2


class ConfigError(FracSPDEError):
    """Invalid configuration value; ``path`` names the offending key."""

    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path


# {{{ schema


@dataclass(frozen=True)
class Param:
    kind: str  # float, int, bool, str, floats, ints, range
    default: object
    help: str = ""
    choices: tuple = ()
    positive: bool = False


def _common(**extra):
    base = {
        "schema": Param("int", SCHEMA_VERSION, "configuration schema version"),
        "output": Param("str", "-", "CSV output path, '-' for stdout"),
    }
    base.update(extra)
    return base


_ORDERS = {
    "beta": Param("float", 0.8, "time-derivative order beta", positive=True),
    "gamma": Param("float", 0.6, "noise order gamma"),
    "eps0": Param("float", 0.1, "regularity margin used when gamma = 1/2", positive=True),
}

SCHEMAS = {
    "ml-eval": _common(
        beta=Param("float", 1.0, "Mittag-Leffler order", positive=True),
        gamma_ml=Param("float", 1.0, "second Mittag-Leffler parameter"),
        z=Param("range", (-1.0, 1.0), "argument range a..b (or a single value)"),
        points=Param("int", 201, "number of equally spaced arguments", positive=True),
        accuracy=Param("float", 1e-12, "relative accuracy target", positive=True),
    ),
    "kernel-table": _common(
        **_ORDERS,
        T=Param("float", 1.0, "horizon", positive=True),
        N=Param("int", 100, "time steps", positive=True),
        lam=Param("floats", (1.0, 4.0, 16.0), "values of |xi|^2"),
    ),
    "simulate": _common(
        **_ORDERS,
        d=Param("int", 1, "space dimension", positive=True),
        L=Param("float", 2.0 * math.pi, "torus side", positive=True),
        n=Param("int", 32, "grid points per side", positive=True),
        T=Param("float", 1.0, "horizon", positive=True),
        N=Param("int", 200, "time steps", positive=True),
        u0_mode=Param("int", 1, "wavenumber of the cosine initial datum"),
        u0_amp=Param("float", 1.0, "amplitude of the initial datum"),
        f_amp=Param("float", 0.0, "constant forcing"),
        noise=Param("str", "none", "noise model", choices=("none", "mode", "white")),
        g_mode=Param("int", 0, "wavenumber of the cosine noise coefficient (noise = mode)"),
        g_amp=Param("float", 1.0, "noise amplitude"),
        sigma=Param("float", 1.0, "Sobolev index of the reported norm"),
        seed=Param("int", 0, "noise seed"),
    ),
    "mc-verify": _common(
        **_ORDERS,
        n=Param("int", 8, "grid points", positive=True),
        L=Param("float", 2.0 * math.pi, "torus side", positive=True),
        T=Param("float", 1.0, "horizon", positive=True),
        N=Param("int", 64, "time steps", positive=True),
        M=Param("int", 10000, "Monte Carlo samples", positive=True),
        mode=Param("int", 1, "wavenumber of the single-mode coefficient g"),
        zmax=Param("float", 3.0, "accepted number of standard errors", positive=True),
        seed=Param("int", 0, "noise seed"),
        workers=Param("int", 0, "worker threads (0: environment default)"),
    ),
    "regularity-probe": _common(
        beta=Param("float", 0.8, "time-derivative order beta", positive=True),
        gamma=Param("float", 0.8, "noise order gamma"),
        eps0=Param("float", 0.1, "regularity margin used when gamma = 1/2", positive=True),
        sigma_list=Param("floats", (1.0, 1.5), "probed Sobolev indices"),
        levels=Param("ints", (16, 32, 64), "spatial resolutions"),
        M=Param("int", 200, "Monte Carlo samples per level", positive=True),
        L=Param("float", 2.0 * math.pi, "torus side", positive=True),
        T=Param("float", 1.0, "horizon", positive=True),
        N=Param("int", 100, "time steps", positive=True),
        margin=Param("float", 0.25, "distance from the threshold treated as boundary", positive=True),
        stable_ratio=Param("float", 1.2, "largest refinement ratio counted as stable", positive=True),
        growth_ratio=Param("float", 1.5, "smallest refinement ratio counted as growth", positive=True),
        method=Param("str", "mc", "Monte Carlo or exact discrete expectation", choices=("mc", "exact")),
        seed=Param("int", 0, "noise seed"),
        workers=Param("int", 0, "worker threads (0: environment default)"),
    ),
    "gronwall-check": _common(
        beta=Param("float", 0.6, "kernel order", positive=True),
        b=Param("float", 2.0, "kernel factor", positive=True),
        T=Param("float", 1.0, "horizon", positive=True),
        N=Param("int", 4096, "time steps", positive=True),
        a=Param("float", 1.0, "constant datum a"),
        rtol=Param("float", 1e-4, "relative slack allowed above the bound (discretization)"),
    ),
    "validate": _common(
        **_ORDERS,
        sigma_nonzero=Param("bool", False, "second-order stochastic coefficients present"),
        mu_nonzero=Param("bool", False, "first-order stochastic coefficients present"),
        white_noise=Param("bool", False, "check space-time white-noise feasibility"),
    ),
}

# keys that do not influence the numbers written
_UNHASHED = {"output", "workers"}


def _parse_scalar(kind, text, path):
    text = text.strip()
    try:
        if kind == "float":
            v = float(text)
            if not math.isfinite(v):
                raise ValueError
            return v
        if kind == "int":
            return int(text)
    except ValueError:
        raise ConfigError(path, f"expected {'a number' if kind == 'float' else 'an integer'}, got {text!r}") from None
    if kind == "bool":
        low = text.lower()
        if low in ("1", "true", "yes", "on"):
            return True
        if low in ("0", "false", "no", "off"):
            return False
        raise ConfigError(path, f"expected a boolean, got {text!r}")
    return text


def _parse_value(path, p: Param, raw):
    if not isinstance(raw, str):
        return raw
    if p.kind in ("floats", "ints"):
        parts = [s for s in raw.replace(" ", ",").split(",") if s]
        if not parts:
            raise ConfigError(path, "expected a non-empty comma-separated list")
        kind = p.kind[:-1]
        vals = tuple(_parse_scalar(kind, s, f"{path}[{i}]") for i, s in enumerate(parts))
        if p.positive:
            for i, v in enumerate(vals):
                if v <= 0:
                    raise ConfigError(f"{path}[{i}]", f"must be positive, got {v}")
        return vals
    if p.kind == "range":
        if ".." in raw:
            lo, hi = raw.split("..", 1)
            a = _parse_scalar("float", lo, f"{path}[0]")
            b = _parse_scalar("float", hi, f"{path}[1]")
        else:
            a = b = _parse_scalar("float", raw, path)
        if b < a:
            raise ConfigError(path, f"empty range {raw!r}")
        return (a, b)
    v = _parse_scalar(p.kind, raw, path)
    if p.choices and v not in p.choices:
        raise ConfigError(path, f"must be one of {', '.join(p.choices)}, got {v!r}")
    if p.positive and v <= 0:
        raise ConfigError(path, f"must be positive, got {v}")
    return v


def parse_config_text(text: str, source: str = "config") -> dict:
    """``key = value`` pairs of a configuration file, as raw strings."""
    out = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}", f"expected 'key = value', got {line!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        if not key:
            raise ConfigError(f"{source}:{lineno}", "empty key")
        if key in out:
            raise ConfigError(f"{source}:{lineno}", f"duplicate key {key!r}")
        out[key] = value
    return out


def resolve(sub: str, file_values: dict, flag_values: dict) -> dict:
    """Schema-checked parameters of ``sub`` (flags over file over defaults)."""
    schema = SCHEMAS[sub]
    merged = dict(file_values)
    named = merged.pop("subcommand", sub)
    if named != sub:
        raise ConfigError(f"{sub}.subcommand", f"file is for {named!r}")
    merged.update({k: v for k, v in flag_values.items() if v is not None})
    for key in merged:
        if key not in schema:
            raise ConfigError(f"{sub}.{key}", "unknown key")
    params = {}
    for key, p in schema.items():
        params[key] = _parse_value(f"{sub}.{key}", p, merged[key]) if key in merged else p.default
    if params["schema"] != SCHEMA_VERSION:
        raise ConfigError(f"{sub}.schema", f"unsupported schema version {params['schema']}")
    return params


def config_hash(sub: str, params: dict) -> str:
    items = [f"subcommand={sub}"] + [f"{k}={params[k]!r}" for k in sorted(params) if k not in _UNHASHED]
    return hashlib.sha256("\n".join(items).encode()).hexdigest()[:16]


# }}}


# {{{ output


def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".17g")
    return str(v)


def _write_csv(params, sub, header, rows, stream):
    buf = io.StringIO()
    seed = params.get("seed", "none")
    buf.write(f"# fracspde {sub} config_hash={config_hash(sub, params)} seed={seed} version={__version__}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([_fmt(v) for v in r])
    text = buf.getvalue()
    out = params["output"]
    if out == "-":
        stream.write(text)
    else:
        with open(out, "w", newline="") as fh:
            fh.write(text)


def _orders(p):
    return FracOrders(p["beta"], p["gamma"], p["eps0"])


def _workers(p):
    w = p.get("workers", 0)
    return default_workers() if not w else w


# }}}


# {{{ subcommands


def _ml_eval(p, out, err):
    a, b = p["z"]
    z = np.linspace(a, b, p["points"]) if b > a else np.array([a])
    vals = np.asarray(mittag_leffler(p["beta"], p["gamma_ml"], z, p["accuracy"]))
    if np.iscomplexobj(vals) and np.max(np.abs(vals.imag), initial=0.0) == 0.0:
        vals = vals.real
    if np.iscomplexobj(vals):
        rows = [(zi, v.real, v.imag) for zi, v in zip(z, vals)]
        _write_csv(p, "ml-eval", ("z", "re", "im"), rows, out)
    else:
        _write_csv(p, "ml-eval", ("z", "value"), zip(z, vals), out)
    return EXIT_OK


def _kernel_table(p, out, err):
    orders = _orders(p)
    tg = TimeGrid(p["T"], p["N"])
    t = tg.nodes[1:]
    rows = []
    for lam in p["lam"]:
        cols = [np.asarray(kernel_symbol(k, orders, t, lam)) for k in KernelKind]
        rows.extend(zip(t, np.full(t.shape, lam), *cols))
    _write_csv(p, "kernel-table", ("t", "lam", "p", "q", "P"), rows, out)
    return EXIT_OK


def _simulate_problem(p):
    orders = _orders(p)
    d = p["d"]
    grid = SpatialGrid(d, p["L"], p["n"])
    tg = TimeGrid(p["T"], p["N"])
    x = grid.points()
    k = 2.0 * math.pi / grid.L
    u0 = FourierField.from_values(grid, p["u0_amp"] * np.cos(k * p["u0_mode"] * x[0]))
    f = FourierField.from_values(grid, np.full(grid.shape, p["f_amp"])) if p["f_amp"] else None
    g, noise = None, None
    if p["noise"] == "mode":
        g = [FourierField.from_values(grid, p["g_amp"] * np.cos(k * p["g_mode"] * x[0]))]
        noise = NoiseSpec(1, seed=p["seed"])
    elif p["noise"] == "white":
        eta = white_noise_basis(grid)
        g = [FourierField.from_values(grid, p["g_amp"] * e) for e in eta]
        noise = NoiseSpec(len(g), NoiseBasis.SPACETIME_WHITE, p["seed"])
    return ModelProblem(orders, grid, tg, u0, f=f, g=g, noise=noise)


def _simulate(p, out, err):
    orders = _orders(p)
    if p["noise"] != "none":
        rep = validate_orders(orders, white_noise=p["noise"] == "white")
        if not rep.accepted:
            err.write(str(rep) + "\n")
            return EXIT_INVALID
    sol = solve_model(_simulate_problem(p))
    mode = (p["u0_mode"],) + (0,) * (p["d"] - 1)
    m = sol.mode(mode)
    rows = []
    for j, t in enumerate(sol.time_grid.nodes):
        fld = sol.field(j)
        rows.append((t, fld.l2_norm(), sobolev_norm(fld, p["sigma"]), m[j].real, m[j].imag))
    _write_csv(p, "simulate", ("t", "l2_norm", "h_sigma_norm", "mode_re", "mode_im"), rows, out)
    return EXIT_OK


def _mc_verify(p, out, err):
    orders = _orders(p)
    grid = SpatialGrid(1, p["L"], p["n"])
    tg = TimeGrid(p["T"], p["N"])
    mode = (p["mode"],)
    prob = ModelProblem(orders, grid, tg, FourierField.zeros(grid), g=[FourierField.single_mode(grid, mode)],
                        noise=NoiseSpec(1, seed=p["seed"]))
    lam = float(grid.lam[grid.mode_index(mode)])
    vals = np.array(run_samples(prob, p["M"], _workers(p), reduce=lambda s: abs(s.mode(mode)[-1]) ** 2))
    est = math.fsum(vals) / vals.size
    se = float(np.std(vals, ddof=1)) / math.sqrt(vals.size)
    oracle = ito_isometry_oracle(lambda s: kernel_symbol(KernelKind.PBG_KERNEL, orders, s, lam), p["T"])
    z = (est - oracle) / se
    ok = abs(z) <= p["zmax"]
    _write_csv(p, "mc-verify", ("beta", "gamma", "M", "estimate", "stderr", "oracle", "z", "passed"),
               [(orders.beta, orders.gamma, vals.size, est, se, oracle, z, ok)], out)
    if not ok:
        err.write(f"MC variance {est:.6g} is {z:.2f} standard errors from the oracle {oracle:.6g}\n")
    return EXIT_OK if ok else EXIT_CONTRACT


def _regularity_probe(p, out, err):
    res = regularity_probe(_orders(p), p["sigma_list"], levels=p["levels"], M=p["M"], L=p["L"], T=p["T"],
                           N=p["N"], seed=p["seed"], margin=p["margin"], stable_ratio=p["stable_ratio"],
                           growth_ratio=p["growth_ratio"], method=p["method"], workers=_workers(p))
    rows = [(r.sigma, r.n, r.estimate, r.stderr, r.ratio) for r in res.rows]
    _write_csv(p, "regularity-probe", ("sigma", "n", "estimate", "stderr", "ratio"), rows, out)
    for s in sorted(res.verdicts):
        err.write(f"sigma = {s:g}: expected {res.verdicts[s]}, {'observed' if res.passed[s] else 'NOT observed'} "
                  f"(threshold {res.threshold:g})\n")
    return EXIT_OK if res.contract_holds else EXIT_CONTRACT


def _gronwall_check(p, out, err):
    tg = TimeGrid(p["T"], p["N"])
    a = SampledPath(tg, np.full(tg.N + 1, p["a"]))
    eta = volterra_iterate(a, p["b"], p["beta"]).values
    bound = np.asarray(gronwall_bound(a, p["b"], p["beta"], tg.nodes), dtype=float)
    _write_csv(p, "gronwall-check", ("t", "iterate", "bound"), zip(tg.nodes, eta, bound), out)
    excess = np.max((eta - bound) / np.maximum(np.abs(bound), 1e-300))
    if excess > p["rtol"]:
        err.write(f"iterate exceeds the bound by {excess:.3g} relative (allowed {p['rtol']:g})\n")
        return EXIT_CONTRACT
    return EXIT_OK


def _validate(p, out, err):
    orders = _orders(p)
    coeffs = None
    if p["sigma_nonzero"] or p["mu_nonzero"]:
        # one noise channel carrying small constant coefficients
        grid = SpatialGrid(1, 2.0 * math.pi, 8)
        coeffs = CoefficientSet(grid, sigma=[[[0.01 if p["sigma_nonzero"] else 0.0]]],
                                mu=[[0.01 if p["mu_nonzero"] else 0.0]])
    rep = validate_orders(orders, coeffs, white_noise=p["white_noise"])
    (out if rep.accepted else err).write(str(rep) + "\n")
    return EXIT_OK if rep.accepted else EXIT_INVALID


_HANDLERS = {
    "ml-eval": _ml_eval,
    "kernel-table": _kernel_table,
    "simulate": _simulate,
    "mc-verify": _mc_verify,
    "regularity-probe": _regularity_probe,
    "gronwall-check": _gronwall_check,
    "validate": _validate,
}

# }}}


def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="fracspde", description=__doc__.split("\n\n")[0])
    ap.add_argument("--version", action="version", version=f"fracspde {__version__}")
    subs = ap.add_subparsers(dest="subcommand", required=True)
    for name, schema in SCHEMAS.items():
        sp = subs.add_parser(name, help=f"{name} pipeline")
        sp.add_argument("config", nargs="?", help="key = value configuration file")
        for key, prm in schema.items():
            flag = "--" + key.replace("_", "-")
            sp.add_argument(flag, dest=key, default=None, metavar=prm.kind.upper(),
                            help=f"{prm.help} (default {prm.default!r})")
    return ap


_NEGATIVE = re.compile(r"^-(\d|\.\d)")


def _join_negative_values(argv):
    """Turn ``--z -1..1`` into ``--z=-1..1`` so negative values are not read as options."""
    out, i = [], 0
    while i < len(argv):
        tok = argv[i]
        if tok.startswith("--") and "=" not in tok and i + 1 < len(argv) and _NEGATIVE.match(argv[i + 1]):
            out.append(f"{tok}={argv[i + 1]}")
            i += 2
        else:
            out.append(tok)
            i += 1
    return out


def run(argv=None, stdout=None, stderr=None) -> int:
    """Run the CLI on ``argv`` and return the exit status."""
    out = sys.stdout if stdout is None else stdout
    err = sys.stderr if stderr is None else stderr
    argv = _join_negative_values(sys.argv[1:] if argv is None else list(argv))
    try:
        args = _parser().parse_args(argv)
    except SystemExit as exc:  # --help, --version or a usage error (already reported by argparse)
        return EXIT_OK if exc.code in (0, None) else EXIT_INVALID
    sub = args.subcommand
    flags = {k: v for k, v in vars(args).items() if k not in ("subcommand", "config")}
    try:
        file_values = {}
        if args.config:
            if not os.path.isfile(args.config):
                raise ConfigError(args.config, "configuration file not found")
            with open(args.config) as fh:
                file_values = parse_config_text(fh.read(), args.config)
        params = resolve(sub, file_values, flags)
        return _HANDLERS[sub](params, out, err)
    except ConfigError as exc:
        err.write(f"fracspde: config error at {exc}\n")
        return EXIT_INVALID
    except FracSPDEError as exc:
        err.write(f"fracspde: {type(exc).__name__}: {exc}\n")
        return EXIT_INVALID


def main() -> None:  # console entry point
    sys.exit(run())


if __name__ == "__main__":
    main()
