"""Command-line front end.

Exit codes: 0 success, 2 validation error, 3 numerical non-convergence
(and 1 when a comparison fails its tolerances).
"""
from __future__ import annotations

import argparse
import json
import math
import secrets
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from . import specfun
from .cfrac import dos_continued, dos_real_axis, omega_cf
from .errors import ConvergenceError, DomainError, SusyLevyError, UnsupportedError
from .levy_core import Family, LevyProcessSpec, spec_from_dict, spec_to_json
from .riccati_mc import PathConfig, estimate, sample_path
from .semiclassical import asymptotic_catalog, diffusion_exponent, fit_low_energy
from .solvable import ClosedFormModel, dos_closed, omega_closed
from .tables import DosTable

EXIT_OK, EXIT_FAIL, EXIT_VALIDATION, EXIT_CONVERGENCE = 0, 1, 2, 3

METHODS = ("cf", "real", "closed", "mc")

_DEFAULTS = {
    "emin": 0.1, "emax": 10.0, "points": 20, "log": False, "method": "cf", "tol": 1e-12,
    "seed": None, "out": None, "workers": 1, "length": 1e4, "trajectories": 4, "dt": 1e-3,
    "eps": 1e-3, "grid": None,
}


# ---------------------------------------------------------------------------
# parsing helpers
# ---------------------------------------------------------------------------

def _number(text):
    try:
        return float(text)
    except ValueError:
        return text


def parse_spec(text: str) -> LevyProcessSpec:
    """Spec from a JSON file, a JSON string or inline ``family key=value ...``."""
    text = text.strip()
    path = Path(text)
    if not text.startswith("{") and "=" not in text and path.suffix == ".json":
        if not path.is_file():
            raise DomainError(f"spec file not found: {text}")
        text = path.read_text()
    elif "=" not in text and path.is_file():
        text = path.read_text()
    if text.lstrip().startswith("{"):
        try:
            d = json.loads(text)
        except json.JSONDecodeError as exc:
            raise DomainError(f"invalid spec JSON: {exc}") from None
        return spec_from_dict(d)
    tokens = [t for t in text.replace(",", " ").split() if t]
    if not tokens:
        raise DomainError("empty spec")
    d = {"params": {}}
    for tok in tokens:
        if "=" in tok:
            key, val = tok.split("=", 1)
            if key == "family":
                d["family"] = val
            else:
                d["params"][key] = _number(val)
        elif "family" not in d:
            d["family"] = tok
        else:
            raise DomainError(f"cannot parse spec token {tok!r}")
    return spec_from_dict(d)


def _grid(opts) -> np.ndarray:
    if opts["grid"]:
        E = np.array(sorted(float(v) for v in str(opts["grid"]).split(",") if v.strip()))
    else:
        n = int(opts["points"])
        lo, hi = float(opts["emin"]), float(opts["emax"])
        if n < 1 or not hi >= lo:
            raise DomainError("need points >= 1 and emax >= emin")
        if opts["log"]:
            if not lo > 0:
                raise DomainError("a logarithmic grid needs emin > 0")
            E = np.geomspace(lo, hi, n)
        else:
            E = np.linspace(lo, hi, n)
    E = np.unique(E)
    if np.any(E == 0):
        raise DomainError("E = 0 is not a valid grid point")
    return E


def _merge(args, config_path):
    """flags > config file > defaults."""
    cfg = {}
    if config_path:
        try:
            cfg = json.loads(Path(config_path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise DomainError(f"cannot read config {config_path}: {exc}") from None
    out = dict(_DEFAULTS)
    out.update({k: v for k, v in cfg.items() if k in _DEFAULTS or k == "spec"})
    for k, v in vars(args).items():
        if v is not None:
            out[k] = v
    return out


def _seed(opts):
    if opts.get("seed") is None:
        opts["seed"] = secrets.randbits(63)
        print(f"seed: {opts['seed']}", file=sys.stderr)
    return int(opts["seed"])


def _path_config(opts, seed):
    return PathConfig(total_length=float(opts["length"]), dt=float(opts["dt"]),
                      epsilon=float(opts["eps"]), seed=seed,
                      n_trajectories=int(opts["trajectories"]), workers=1)


# ---------------------------------------------------------------------------
# point evaluation
# ---------------------------------------------------------------------------

def compute_point(spec: LevyProcessSpec, E: float, method: str, opts, seed=0):
    """(N, gamma, err) at one energy with the requested route."""
    tol = float(opts.get("tol", 1e-12))
    if method in ("cf", "real"):
        if E < 0:
            ov = omega_cf(spec, E, tol=max(tol, 1e-14))
            return 0.0, float(ov.omega.real), float(ov.err_estimate)
        ov = dos_continued(spec, E) if method == "cf" else dos_real_axis(spec, E, tol=max(tol, 1e-12))
        return float(ov.N), float(ov.gamma), float(ov.err_estimate)
    if method == "closed":
        model = ClosedFormModel.from_spec(spec)
        if E < 0:
            return 0.0, float(omega_closed(model, E).real), 0.0
        N, g = dos_closed(model, E)
        return float(N), float(g), 0.0
    if method == "mc":
        est = estimate(spec, E, _path_config(opts, seed))
        return est.N_hat, est.gamma_hat, est.stderr_N
    raise DomainError(f"unknown method {method!r}")


def build_table(spec, E_grid, method, opts, seed=0) -> DosTable:
    workers = max(1, int(opts.get("workers") or 1))
    # mc points get distinct, reproducible seeds derived from the master seed
    seeds = np.random.SeedSequence(seed).generate_state(len(E_grid), dtype=np.uint64)
    tasks = [(float(E), int(s)) for E, s in zip(E_grid, seeds)]

    def run(task):
        return compute_point(spec, task[0], method, opts, task[1])

    if workers == 1:
        rows = [run(t) for t in tasks]
    else:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            rows = list(ex.map(run, tasks))
    N, g, err = (np.array(c) for c in zip(*rows))
    meta = {"spec": spec_to_json(spec), "grid": [float(e) for e in E_grid], "seed": int(seed),
            "version": __version__, "method": method}
    return DosTable(np.asarray(E_grid, float), N, g, err, [method] * len(E_grid), meta)


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

def _emit(text, out):
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def cmd_table(opts) -> int:
    spec = parse_spec(opts["spec"])
    method = opts["method"]
    _check_method(spec, method)
    seed = _seed(opts) if method == "mc" else int(opts["seed"] or 0)
    table = build_table(spec, _grid(opts), method, opts, seed)
    if opts["out"]:
        table.write(opts["out"])
    else:
        sys.stdout.write(table.to_csv_text())
    return EXIT_OK


def _check_method(spec, method):
    if method not in METHODS:
        raise DomainError(f"method must be one of {METHODS}")
    if method in ("cf", "real") and spec.family is Family.BROWNIAN:
        raise UnsupportedError("the continued fraction is refused for processes with a Brownian part: "
                               "it converges to a ratio of I-Bessel functions, not to the "
                               "characteristic function; use --method closed or mc")
    if method == "closed":
        ClosedFormModel.from_spec(spec)


def cmd_compare(opts) -> int:
    spec = parse_spec(opts["spec"])
    E_grid = _grid(opts)
    seed = _seed(opts) if not opts.get("no_mc") else 0
    tol = float(opts.get("compare_tol") or 1e-6)
    routes = []
    notes = []
    for m in ("cf", "closed", "mc"):
        if m == "mc" and opts.get("no_mc"):
            continue
        try:
            _check_method(spec, m)
            routes.append(m)
        except (UnsupportedError, DomainError) as exc:
            notes.append(f"{m}: skipped ({exc})")
    results = {m: build_table(spec, E_grid, m, opts, seed) for m in routes}
    lines = [f"# spec: {spec_to_json(spec)}", *(f"# {n}" for n in notes),
             "E,route_a,route_b,N_a,N_b,diff_N,gamma_a,gamma_b,diff_gamma,limit,pass"]
    ok = True
    for i, E in enumerate(E_grid):
        for ia, a in enumerate(routes):
            for b in routes[ia + 1:]:
                ta, tb = results[a], results[b]
                dN = abs(ta.N[i] - tb.N[i])
                dg = abs(ta.gamma[i] - tb.gamma[i])
                if "mc" in (a, b):
                    mc = ta if a == "mc" else tb
                    lim = 3.0 * mc.err[i] + 1e-12
                    passed = dN <= lim  # MC gamma carries a discretisation bias; N decides
                else:
                    lim = tol * max(1.0, abs(tb.gamma[i]), abs(tb.N[i]))
                    passed = dN <= lim and dg <= lim
                ok &= bool(passed)
                lines.append(",".join([repr(float(E)), a, b, repr(float(ta.N[i])), repr(float(tb.N[i])),
                                       repr(float(dN)), repr(float(ta.gamma[i])), repr(float(tb.gamma[i])),
                                       repr(float(dg)), repr(float(lim)), "PASS" if passed else "FAIL"]))
    lines.append(f"# overall: {'PASS' if ok else 'FAIL'}")
    _emit("\n".join(lines) + "\n", opts["out"])
    return EXIT_OK if ok else EXIT_FAIL


def cmd_asymptotics(opts) -> int:
    spec = parse_spec(opts["spec"])
    form = asymptotic_catalog(spec)
    report = {"spec": json.loads(spec_to_json(spec)), "catalog": form.to_dict(),
              "leading": _describe(form), "diffusion_exponent": float(diffusion_exponent(form))}
    if not opts.get("catalog_only"):
        E_grid = _grid(opts)
        method = opts["method"]
        logs = []
        for E in E_grid:
            if method == "closed":
                N, g, lnN = dos_closed(ClosedFormModel.from_spec(spec), E, full_output=True)
            else:
                ov = dos_real_axis(spec, E)
                N, g, lnN = ov.N, ov.gamma, ov.log_N
            logs.append((N, g, lnN))
        N, g, lnN = (np.array(c) for c in zip(*logs))
        table = DosTable(E_grid, N, g, np.zeros_like(N), method)
        fit = fit_low_energy(table, form, log_N=lnN)
        report["fit"] = fit.to_dict()
        report["fit"]["residuals"] = [float(r) for r in fit.residuals]
    _emit(json.dumps(report, indent=2) + "\n", opts["out"])
    return EXIT_OK


def _describe(form) -> str:
    x = form.exponential_power
    if form.log_correction:
        core = f"-{form.exponential_coeff:g} * ln(1/E) / E^{-x:g}"
        if form.exponential_coeff == 1 and x == -0.5:
            core = "-ln(1/E)/sqrt(E)"
    else:
        core = f"-{form.exponential_coeff:.12g} * E^({x:g})"
    alg = "" if form.algebraic_power is None else f" + ({form.algebraic_power:g}) ln E"
    return f"ln N ~ {core}{alg}"


def cmd_paths(opts) -> int:
    spec = parse_spec(opts["spec"])
    seed = _seed(opts)
    cfg = PathConfig(total_length=float(opts["length"]), dt=float(opts["dt"]),
                     epsilon=float(opts["eps"]), seed=seed, n_trajectories=1)
    lines = [f"# seed={seed}", f"# spec={spec_to_json(spec)}"]
    if opts.get("histogram_E") is not None:
        E = float(opts["histogram_E"])
        est = estimate(spec, E, cfg)
        lines.append(f"# E={E!r} N_hat={est.N_hat!r} gamma_hat={est.gamma_hat!r}")
        lines.append("z_bin_lo,z_bin_hi,mass")
        lines += [f"{lo!r},{hi!r},{m!r}" for lo, hi, m in est.histogram_rows()]
    else:
        x, w = sample_path(spec, cfg, np.random.default_rng(seed))
        stride = max(1, int(opts.get("stride") or 1))
        lines.append("x,W")
        lines += [f"{float(xi)!r},{float(wi)!r}" for xi, wi in zip(x[::stride], w[::stride])]
    _emit("\n".join(lines) + "\n", opts["out"])
    return EXIT_OK


_SPECFUN = {
    "gamma": lambda a: specfun.gamma_fn(a.x, full_output=True),
    "beta": lambda a: specfun.beta_fn(a.x, a.y, full_output=True),
    "besselk": lambda a: specfun.bessel_k_i(a.nu, a.x, full_output=True)[0],
    "hankel1": lambda a: specfun.hankel1(a.nu, a.x, full_output=True),
    "pcfd": lambda a: specfun.pcf_d(a.nu, _complex(a.z), scaled=a.scaled, full_output=True),
    "hyp2f1m1": lambda a: specfun.hyp2f1_at_minus1(a.a, a.b, a.c, full_output=True),
}


def _complex(text):
    return complex(text.replace(" ", "")) if isinstance(text, str) else text


def cmd_specfun(args) -> int:
    res = _SPECFUN[args.function](args)
    val = complex(res.value)
    out = {"function": args.function, "value": [val.real, val.imag] if val.imag else val.real,
           "est_error": float(res.est_error), "method_used": res.method_used}
    print(json.dumps(out))
    return EXIT_OK


# ---------------------------------------------------------------------------
# argument parser
# ---------------------------------------------------------------------------

def _common(p, grid=True):
    p.add_argument("--spec", help="process spec: JSON file, JSON text or 'family key=value ...'")
    p.add_argument("--config", help="JSON file with option defaults")
    p.add_argument("--seed", type=int, help="master seed (drawn and printed when omitted)")
    p.add_argument("--out", help="output file (default stdout)")
    p.add_argument("--tol", type=float)
    p.add_argument("--workers", type=int)
    if grid:
        p.add_argument("--emin", type=float)
        p.add_argument("--emax", type=float)
        p.add_argument("--points", type=int)
        p.add_argument("--log", action="store_true", default=None)
        p.add_argument("--grid", help="comma-separated energies (overrides emin/emax/points)")
    p.add_argument("--length", type=float, help="Monte Carlo length per trajectory")
    p.add_argument("--trajectories", type=int)
    p.add_argument("--dt", type=float)
    p.add_argument("--eps", type=float, help="jump truncation for interlacing")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="susylevy", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("table", help="N and gamma on an energy grid")
    _common(p)
    p.add_argument("--method", choices=METHODS)

    p = sub.add_parser("compare", help="pairwise comparison of cf, closed and mc routes")
    _common(p)
    p.add_argument("--compare-tol", type=float, dest="compare_tol")
    p.add_argument("--no-mc", action="store_true", default=None, dest="no_mc")

    p = sub.add_parser("asymptotics", help="catalogued low-energy form and least-squares fit")
    _common(p)
    p.add_argument("--method", choices=("real", "closed"))
    p.add_argument("--catalog-only", action="store_true", default=None, dest="catalog_only")

    p = sub.add_parser("paths", help="W(x) samples or a stationary Z histogram")
    _common(p, grid=False)
    p.add_argument("--stride", type=int)
    p.add_argument("--histogram-E", type=float, dest="histogram_E")

    p = sub.add_parser("specfun", help="evaluate one special function")
    p.add_argument("function", choices=sorted(_SPECFUN))
    p.add_argument("--x", type=float)
    p.add_argument("--y", type=float)
    p.add_argument("--nu", type=float)
    p.add_argument("--z", default="0")
    p.add_argument("--a", type=float)
    p.add_argument("--b", type=float)
    p.add_argument("--c", type=float)
    p.add_argument("--scaled", action="store_true")
    return ap


_COMMANDS = {"table": cmd_table, "compare": cmd_compare, "asymptotics": cmd_asymptotics,
             "paths": cmd_paths}


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        if args.command == "specfun":
            return cmd_specfun(args)
        cmd = args.command
        config = args.config
        del args.command, args.config
        opts = _merge(args, config)
        if not opts.get("spec"):
            raise DomainError("--spec is required")
        if cmd == "asymptotics" and opts["method"] not in ("real", "closed"):
            opts["method"] = "real"
        return _COMMANDS[cmd](opts)
    except ConvergenceError as exc:
        print(f"error: no convergence: {exc}", file=sys.stderr)
        return EXIT_CONVERGENCE
    except (SusyLevyError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
