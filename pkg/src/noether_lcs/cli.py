"""Command-line front end.

One structured problem file per run, given as the single positional argument;
flags only override tolerances and grids.  Reports are deterministic JSON
(fixed key order, floats at 17 significant digits); curves travel as CSV with
columns t, x1..xm (velocities appended with --emit-velocity).

Exit codes: 0 all verdicts passed, 2 a mathematical verdict failed,
1 input or solver error.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .curves import Curve, action, read_curve_csv, write_curve_csv
from .dsl import DomainError
from .euler_lagrange import SolverError, el_residual, solve_extremal
from .fields import FDConfig, DEFAULT_FD, check_normal_differentiability
from .legendre_jacobi import (
    jacobi_eigen,
    jacobi_operators,
    legendre_check,
)
from .problem import ProblemError, ProblemFile, load_problem
from .spaces import ValidationError, make_space
from .symmetry import (
    check_invariance,
    noether_first_integral,
    verify_conservation,
)

SCHEMA_VERSION = 1


def _format_value(obj):
    if isinstance(obj, float):
        if math.isinf(obj):
            return "inf" if obj > 0 else "-inf"
        return float(format(obj, ".17g"))
    if isinstance(obj, (np.floating,)):
        return _format_value(float(obj))
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.ndarray):
        return [_format_value(z) for z in obj.tolist()]
    if isinstance(obj, dict):
        return {k: _format_value(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_format_value(z) for z in obj]
    return obj


def canonical_json(report: dict) -> str:
    import json

    return json.dumps(_format_value(report), indent=2) + "\n"


def _base_report(command: str, prob: ProblemFile, args) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "command": command,
        "input": str(prob.path),
        "input_digest": prob.digest,
        "grid": {"a": prob.grid.a, "b": prob.grid.b, "n": prob.grid.n},
        "tolerances": dict(sorted(prob.tolerances.items())),
    }


def _outdir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _load_curve(prob: ProblemFile, args) -> Curve:
    if getattr(args, "seed_curve", None):
        return read_curve_csv(prob.space, args.seed_curve)
    bc = prob.require_boundary()
    return solve_extremal(prob.lagrangian, bc, prob.grid, prob.space, prob.solver)


def cmd_solve(prob: ProblemFile, args):
    bc = prob.require_boundary()
    cfg = prob.solver
    if args.seed_curve:
        from dataclasses import replace

        cfg = replace(cfg, seed_curve=read_curve_csv(prob.space, args.seed_curve))
    curve = solve_extremal(prob.lagrangian, bc, prob.grid, prob.space, cfg)
    res = el_residual(prob.lagrangian, curve)
    act = action(prob.lagrangian, curve)
    out = _outdir(args)
    csv_path = out / "extremal.csv"
    write_curve_csv(curve, csv_path, velocities=args.emit_velocity)
    report = _base_report("solve", prob, args)
    report.update(
        {
            "residual_max": res.max_norm,
            "action_value": act.value,
            "quadrature": act.rule,
            "outputs": {"extremal_csv": csv_path.name},
            "verdicts": {"converged": True},
        }
    )
    return report, 0


def cmd_legendre(prob: ProblemFile, args):
    curve = _load_curve(prob, args)
    rep = legendre_check(prob.lagrangian, curve, tol=prob.tolerances["legendre"])
    report = _base_report("legendre", prob, args)
    report.update(
        {
            "min_eigenvalue": rep.global_min,
            "per_node_min": rep.min_eigenvalues,
            "violating_nodes": list(rep.violating_nodes),
            "verdicts": {"legendre": rep.passed},
        }
    )
    return report, 0 if rep.passed else 2


def cmd_jacobi(prob: ProblemFile, args):
    curve = _load_curve(prob, args)
    ops = jacobi_operators(prob.lagrangian, curve)
    pairs = jacobi_eigen(ops, prob.grid, k=args.k)
    out = _outdir(args)
    paths = []
    for idx, (_, fn) in enumerate(pairs, start=1):
        p = out / f"jacobi_mode_{idx}.csv"
        write_curve_csv(fn, p)
        paths.append(p.name)
    report = _base_report("jacobi", prob, args)
    report.update(
        {
            "k": args.k,
            "eigenvalues": [ev for ev, _ in pairs],
            "outputs": {"modes_csv": paths},
            "verdicts": {"computed": True},
        }
    )
    return report, 0


def _generator_or_fail(prob: ProblemFile, name: str):
    if name not in prob.generators:
        raise ProblemError(
            f"unknown generator {name!r}; file defines {sorted(prob.generators)}"
        )
    return prob.generators[name]


def cmd_check_invariance(prob: ProblemFile, args):
    report = _base_report("check-invariance", prob, args)
    verdicts = {}
    details = {}
    names = [args.generator] if args.generator else sorted(prob.generators)
    if not names:
        raise ProblemError("problem file defines no generators")
    for name in names:
        g = _generator_or_fail(prob, name)
        inv = check_invariance(
            prob.lagrangian, g, prob.sampling, tol=prob.tolerances["invariance"]
        )
        verdicts[name] = inv.passed
        details[name] = {"max_residual": inv.max_residual, "samples": prob.sampling.count}
    report.update({"generators": details, "verdicts": verdicts})
    return report, 0 if all(verdicts.values()) else 2


def cmd_noether(prob: ProblemFile, args):
    g = _generator_or_fail(prob, args.generator)
    inv = check_invariance(
        prob.lagrangian, g, prob.sampling, tol=prob.tolerances["invariance"]
    )
    integral = noether_first_integral(prob.lagrangian, g)
    curve = _load_curve(prob, args)
    res = el_residual(prob.lagrangian, curve)
    cons = verify_conservation(integral, curve, tol=prob.tolerances["conservation"])
    report = _base_report("noether", prob, args)
    report.update(
        {
            "generator": args.generator,
            "invariance_max_residual": inv.max_residual,
            "extremal_residual_max": res.max_norm,
            "conserved_mean": cons.mean,
            "conserved_max_deviation": cons.max_deviation,
            "conserved_relative_deviation": cons.relative_deviation,
            "verdicts": {
                "invariance": inv.passed,
                "extremal": res.max_norm <= prob.solver.tol * 10,
                "conservation": cons.passed,
            },
        }
    )
    ok = all(report["verdicts"].values())
    return report, 0 if ok else 2


def cmd_verify(prob: ProblemFile, args):
    if args.integral not in prob.integrals:
        raise ProblemError(
            f"unknown integral {args.integral!r}; file defines {sorted(prob.integrals)}"
        )
    integral = prob.integrals[args.integral]
    curve = _load_curve(prob, args)
    cons = verify_conservation(integral, curve, tol=prob.tolerances["conservation"])
    report = _base_report("verify", prob, args)
    report.update(
        {
            "integral": args.integral,
            "conserved_mean": cons.mean,
            "conserved_max_deviation": cons.max_deviation,
            "conserved_relative_deviation": cons.relative_deviation,
            "verdicts": {"conservation": cons.passed},
        }
    )
    return report, 0 if cons.passed else 2


def cmd_find_symmetries(prob: ProblemFile, args):
    from .symmetry import find_affine_symmetries

    found = find_affine_symmetries(prob.lagrangian, prob.sampling)
    report = _base_report("find-symmetries", prob, args)
    report.update(
        {
            "count": len(found),
            "generators": [
                {"coefficients": getattr(g, "coefficients", None)} for g in found
            ],
            "verdicts": {"searched": True},
        }
    )
    return report, 0


def cmd_audit_diff(prob: ProblemFile, args):
    m = prob.space.dim
    L = prob.lagrangian
    t_mid = 0.5 * (prob.grid.a + prob.grid.b)
    stacked = make_space(
        dim=2 * m,
        weights=np.concatenate([prob.space.weights, prob.space.weights]),
        num_seminorms=2 * m,
    )
    scalar = make_space(dim=1, weights=[1.0], num_seminorms=1)

    def g(z):
        return np.array([L(t_mid, z[:m], z[m:])])

    def deriv(z):
        row = np.concatenate(
            [L.partial("x", t_mid, z[:m], z[m:]), L.partial("v", t_mid, z[:m], z[m:])]
        )
        return row.reshape(1, 2 * m)

    ts, xs, vs = prob.sampling.samples(m)
    bases = [np.concatenate([xs[i], vs[i]]) for i in range(min(5, len(ts)))]
    audit = check_normal_differentiability(
        g, deriv, stacked, scalar, bases, tol=prob.tolerances["audit"]
    )
    report = _base_report("audit-diff", prob, args)
    report.update(
        {
            "radii": audit.radii,
            "pairs": {
                f"s{s}_m{mm}": {
                    "worst_ratios": audit.ratios[(s, mm)],
                    "passed": audit.verdicts[(s, mm)],
                }
                for (s, mm) in sorted(audit.ratios)
            },
            "verdicts": {"differentiable": audit.passed},
        }
    )
    return report, 0 if audit.passed else 2


_COMMANDS = {
    "solve": cmd_solve,
    "legendre": cmd_legendre,
    "jacobi": cmd_jacobi,
    "check-invariance": cmd_check_invariance,
    "noether": cmd_noether,
    "verify": cmd_verify,
    "find-symmetries": cmd_find_symmetries,
    "audit-diff": cmd_audit_diff,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="noether-lcs",
        description="Variational analysis driven by a structured problem file",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in _COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("problem", help="path to the JSON problem file")
        p.add_argument("--out", default=".", help="output directory for reports/CSV")
        p.add_argument("--grid-n", type=int, default=None, help="override interval count")
        p.add_argument("--tol", type=float, default=None, help="override all verdict tolerances")
        p.add_argument("--fd-step", type=float, default=None, help="finite-difference base step")
        p.add_argument(
            "--fd-richardson",
            choices=("on", "off"),
            default="on",
            help="toggle Richardson extrapolation in finite differences",
        )
        p.add_argument("--seed-curve", default=None, help="CSV curve to start from / analyze")
        p.add_argument("--emit-velocity", action="store_true")
        if name == "jacobi":
            p.add_argument("--k", type=int, default=3, help="number of eigenpairs")
        if name in ("check-invariance", "noether"):
            required = name == "noether"
            p.add_argument("--generator", required=required, default=None)
        if name == "verify":
            p.add_argument("--integral", required=True)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    threads = os.environ.get("NOETHER_LCS_THREADS")
    if threads is not None and not threads.isdigit():
        print(f"NOETHER_LCS_THREADS must be an integer, got {threads!r}", file=sys.stderr)
        return 1
    fd = DEFAULT_FD
    if args.fd_step is not None or args.fd_richardson == "off":
        fd = FDConfig(
            step=args.fd_step if args.fd_step is not None else DEFAULT_FD.step,
            richardson=args.fd_richardson == "on",
        )
    started = time.perf_counter()
    try:
        prob = load_problem(args.problem, grid_n=args.grid_n, fd=fd)
        if args.tol is not None:
            prob.tolerances = {k: args.tol for k in prob.tolerances}
        report, code = _COMMANDS[args.command](prob, args)
    except (ProblemError, ValidationError, SolverError, DomainError, OSError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 1
    out = _outdir(args)
    path = out / f"{args.command.replace('-', '_')}_report.json"
    text = canonical_json(report)
    path.write_text(text)
    sys.stdout.write(text)
    elapsed = time.perf_counter() - started
    print(f"[{args.command}] wall time {elapsed:.3f}s -> {path}", file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
