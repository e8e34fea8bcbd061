"""bm-spectra command line: verification runs, constant transfers and single computations."""

from __future__ import annotations

import argparse
import json
import os
import platform
import sys
from pathlib import Path

import numpy as np
import scipy

from . import __version__, criteria, santalo
from .body import HomogeneousPotential, make_body
from .bochner import KINDS as BOCHNER_KINDS
from .bochner import bochner_residual
from .config import body_spec_from_dict, load_config, parse_body_spec
from .errors import BMSpectraError, ConfigError, DomainError
from .functions import TestFunction
from .report import Check, Report, dumps, write_csv
from .sphere import Field, build_grid
from .spectral import assemble_hilbert_forms, best_constant, best_even_constant

EXIT_OK, EXIT_FAILED, EXIT_CONFIG, EXIT_NUMERICAL = 0, 1, 2, 3


def _environment(config=None):
    env = {"bmspectra": __version__, "numpy": np.__version__, "scipy": scipy.__version__,
           "python": platform.python_version()}
    if config is not None:
        env.update(threads=config.threads, seed=config.seed, resolutions=config.resolutions)
    return env


def run(config) -> Report:
    """Execute the configured suites in dependency order and return the report.

    Errors inside a suite are recorded with the suite name and re-raised after
    the remaining suites have run, so a partial report is still available on
    the exception as ``exc.report``.
    """
    from .suites import RUNNERS, SuiteContext

    cfg = load_config(config)
    report = Report(config=cfg.raw, environment=_environment(cfg))
    report.environment["body"] = cfg.body.describe()
    ctx = SuiteContext(cfg, report)
    first_error = None
    for name in cfg.suites:
        try:
            RUNNERS[name](ctx)
        except BMSpectraError as exc:
            report.errors.append({"suite": name, "type": type(exc).__name__, "message": str(exc)})
            first_error = first_error or exc
    if first_error is not None:
        first_error.report = report
        raise first_error
    return report


def _write_outputs(report: Report, report_path, csv_dir):
    text = report.to_json()
    if report_path:
        Path(report_path).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    if csv_dir:
        os.makedirs(csv_dir, exist_ok=True)
        for name, (header, rows) in sorted(report.curves.items()):
            write_csv(os.path.join(csv_dir, f"{name}.csv"), header, rows)


def _exit_code(exc):
    if isinstance(exc, (ConfigError, DomainError)):
        return EXIT_CONFIG
    return EXIT_NUMERICAL


def _fail(exc, code=None):
    print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
    return _exit_code(exc) if code is None else code


# ---------------------------------------------------------------- subcommands

def cmd_run(args):
    try:
        cfg = load_config(args.config)
    except BMSpectraError as exc:
        return _fail(exc)
    try:
        report = run(args.config)
    except BMSpectraError as exc:
        partial = getattr(exc, "report", None)
        if partial is not None:
            _write_outputs(partial, args.output or cfg.report_path, args.csv_dir or cfg.csv_dir)
        return _fail(exc)
    _write_outputs(report, args.output or cfg.report_path, args.csv_dir or cfg.csv_dir)
    failed = [c for c in report.checks if not c.passed]
    for c in failed:
        print(f"FAIL {c.suite}/{c.name}: {c.value!r} {c.relation} {c.threshold!r}", file=sys.stderr)
    return EXIT_OK if not failed else EXIT_FAILED


def cmd_transfer(args):
    n = args.n
    if (args.c_alpha is None) == (args.p is None):
        return _fail(ConfigError("give exactly one of --c-alpha or --p"))
    try:
        if args.p is not None:
            alpha, beta, c_nu = criteria.params_from_p(n, args.p)
            c_alpha = 1 - 1 / alpha
            out = {"n": n, "p": args.p, "alpha": alpha, "beta": beta, "C_nu": c_nu,
                   "C_alpha": c_alpha, "p_round_trip": criteria.p_from_Calpha(n, alpha, c_alpha)}
        else:
            if args.alpha is None:
                return _fail(ConfigError("--c-alpha needs --alpha"))
            alpha, c = args.alpha, args.c_alpha
            c_nu = criteria.transfer_forward(n, alpha, c)
            out = {"n": n, "alpha": alpha, "beta": alpha / (alpha - 1), "C_alpha": c, "C_nu": c_nu,
                   "C_mu_round_trip": criteria.transfer_backward(n, alpha, c_nu),
                   "p": criteria.p_from_Calpha(n, alpha, c), "p_from_C_nu": criteria.p_from_Cnu(n, c_nu)}
    except BMSpectraError as exc:
        return _fail(exc)
    width = max(len(k) for k in out)
    for k, v in out.items():
        print(f"{k:<{width}}  {v:.12g}")
    sys.stdout.write(dumps(out, indent=0).replace("\n", " ").strip() + "\n")
    return EXIT_OK


def cmd_spectrum(args):
    try:
        body = make_body(parse_body_spec(args.body))
        grid = build_grid(body.n, args.resolution)
        forms = assemble_hilbert_forms(body, grid, args.degree)
        even, full = best_even_constant(forms), best_constant(forms)
    except BMSpectraError as exc:
        return _fail(exc)
    out = {"body": body.spec.describe(), "resolution": grid.resolution, "nodes": grid.size,
           "best_even_constant": even.best_constant, "implied_p": even.implied_p,
           "unrestricted_constant": full.best_constant, "eigen_residual": even.residual,
           "leading_eigenvalues": even.eigenvalues[:5]}
    sys.stdout.write(dumps(out))
    return EXIT_OK


def cmd_qij(args):
    try:
        body = make_body(parse_body_spec(args.body))
        pts = criteria.sample_orthant_points(body.n, args.points, args.seed, args.delta)
        q = criteria.qij_report(body, pts, args.delta)
    except BMSpectraError as exc:
        return _fail(exc)
    off = q.offdiagonal()
    out = {"body": body.spec.describe(), "points": len(pts), "delta": q.delta,
           "max_disagreement": q.max_disagreement, "offdiagonal_min": float(off.min()),
           "offdiagonal_max": float(off.max()), "theorem_applicable": q.theorem_applicable,
           "min_margin": q.min_margin, "argmin": list(q.argmin),
           "condition_holds": q.condition_holds, "notes": q.notes}
    sys.stdout.write(dumps(out))
    return EXIT_OK


def cmd_bochner(args):
    try:
        spec = parse_body_spec(args.potential)
        body = make_body(spec)
        if args.kind == "sphere_centroaffine":
            grid = build_grid(body.n, args.resolution or (256 if body.n == 2 else 20))
            expr = args.test_function or ("x1**2 - x2**2 + x1*x2" if body.n >= 2 else "x")
            tf = TestFunction.parse(expr, body.n)
            u = Field(grid, tf.value(grid.nodes))
            residual = bochner_residual(args.kind, body, u, grid)
        else:
            pot = HomogeneousPotential(body, spec.alpha)
            default = "x**2*exp(-x**2)" if body.n == 1 else "x1**2*exp(-x1**2-x2**2)"
            tf = TestFunction.parse(args.test_function or default, body.n)
            residual = bochner_residual(args.kind, pot, tf)
    except BMSpectraError as exc:
        return _fail(exc)
    out = {"kind": args.kind, "potential": spec.describe(), "test_function": tf.expression,
           "relative_residual": residual}
    sys.stdout.write(dumps(out))
    return EXIT_OK


SANTALO_KEYS = {"schema_version", "potential", "f", "conjugate", "set_body", "perturbations",
                "seed", "output"}


def _santalo_config(path):
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config: {exc}") from exc
    if not isinstance(data, dict) or set(data) - SANTALO_KEYS:
        raise ConfigError(f"santalo config accepts only {sorted(SANTALO_KEYS)}")
    if data.get("schema_version") != 1:
        raise ConfigError("schema_version must be 1")
    if "potential" not in data:
        raise ConfigError("santalo config needs a potential")
    return data


def run_santalo(data) -> Report:
    pspec = data["potential"]
    spec = parse_body_spec(pspec) if isinstance(pspec, str) else body_spec_from_dict(pspec)
    body = make_body(spec)
    pot = HomogeneousPotential(body, spec.alpha)
    report = Report(config=data, environment=_environment())
    ftext = data.get("f", "Phi")
    if ftext == "Phi":
        f = santalo.ConvexFunction.from_potential(pot)
    else:
        conj = None
        if data.get("conjugate"):
            conj = TestFunction.parse(data["conjugate"], body.n).value
        f = santalo.ConvexFunction.parse(ftext, body.n, conj)
    inp = santalo.BSInput(pot, f)
    ratio = santalo.bs_ratio(inp)
    report.add(Check("santalo", "bs_ratio", ratio, 1 + 1e-6, "<=", {"f": f.label, "p": pot.alpha},
                     {"integrals": inp.info}))
    if data.get("set_body"):
        sb = data["set_body"]
        kbody = make_body(parse_body_spec(sb) if isinstance(sb, str) else body_spec_from_dict(sb))
        r = santalo.bs_set_ratio(kbody, pot)
        report.add(Check("santalo", "bs_set_ratio", r, 1 + 1e-8, "<=", {"K": kbody.spec.describe()}))
    k = int(data.get("perturbations", 0))
    seed = int(data.get("seed", 0))
    for i in range(k):
        g = santalo.random_perturbation(pot, seed + i)
        report.add(Check("santalo", f"bs_ratio_perturbation[{i}]", santalo.bs_ratio(santalo.BSInput(pot, g)),
                         1 + 1e-6, "<=", {"f": g.label}))
    return report


def cmd_santalo(args):
    try:
        data = _santalo_config(args.config)
        report = run_santalo(data)
    except BMSpectraError as exc:
        return _fail(exc)
    _write_outputs(report, args.output or data.get("output"), None)
    return EXIT_OK if report.all_passed else EXIT_FAILED


# ---------------------------------------------------------------- entry point

def build_parser():
    ap = argparse.ArgumentParser(prog="bm-spectra", description=__doc__)
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run verification suites from a JSON config")
    p.add_argument("config")
    p.add_argument("--output", help="report path (default: config output.report or stdout)")
    p.add_argument("--csv-dir", help="directory for CSV curve files")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("transfer", help="constant transfer table")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--alpha", type=float)
    p.add_argument("--c-alpha", type=float)
    p.add_argument("--p", type=float)
    p.set_defaults(func=cmd_transfer)

    p = sub.add_parser("spectrum", help="best even constant of the Hilbert forms")
    p.add_argument("--body", required=True, help="JSON, JSON file or kind:key=val,...")
    p.add_argument("--resolution", type=int, required=True)
    p.add_argument("--degree", type=int)
    p.set_defaults(func=cmd_spectrum)

    p = sub.add_parser("qij", help="Q_ij report at random orthant points")
    p.add_argument("--body", required=True)
    p.add_argument("--points", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--delta", type=float, default=1e-3)
    p.set_defaults(func=cmd_qij)

    p = sub.add_parser("bochner", help="relative residual of a Bochner identity")
    p.add_argument("--kind", required=True, choices=BOCHNER_KINDS)
    p.add_argument("--potential", required=True, help="body spec; alpha sets the degree")
    p.add_argument("--test-function", help="sympy expression in x or x1..xn")
    p.add_argument("--resolution", type=int)
    p.set_defaults(func=cmd_bochner)

    p = sub.add_parser("santalo", help="Blaschke-Santalo ratios from a JSON config")
    p.add_argument("--config", required=True)
    p.add_argument("--output")
    p.set_defaults(func=cmd_santalo)
    return ap


def main(argv=None):
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
