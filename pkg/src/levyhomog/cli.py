"""Command line entry point.

    levyhomog <command> --config <path> [--out <dir>] [--method direct|discounted] [--debug-tamper]

Exit status 0 on success, 1 when a numerical stage fails, 2 for bad input or
I/O errors. Diagnostics go to standard error.
"""

from __future__ import annotations

import argparse
import dataclasses
import sys
from pathlib import Path

from .cell import estimate_d, solve_cell_direct
from .config import Config, load_config
from .diagnostics import split_battery
from .effective import build_effective, check_subellipticity
from .errors import ComputationError, ConfigError, InputError
from .harness import SweepConfig, render, run_sweep
from .io import atomic_write_text, dump_json, fmt_float
from .pide import make_problem, solve
from .quadrature import build_quadrature, tampered_quadrature
from .selftest import run_selftest

COMMANDS = ("cell", "effective", "solve", "homogenize", "split-check", "selftest")

__all__ = ["main", "dispatch", "build_parser", "COMMANDS"]


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="levyhomog", description="Periodic homogenization of a 1D Levy-type PIDE.")
    ap.add_argument("command", choices=COMMANDS)
    ap.add_argument("--config", help="INI configuration file (not needed for selftest)")
    ap.add_argument("--out", help="output directory, overrides [output] dir")
    ap.add_argument("--method", choices=("direct", "discounted"), help="cell solver, overrides [cell] method")
    ap.add_argument("--debug-tamper", action="store_true",
                    help="break monotonicity of the quadrature on purpose (exercises failure paths)")
    ap.add_argument("--timings", action="store_true", help="keep measured wall times in the CSV table")
    return ap


def _torus_quad(cfg: Config):
    return build_quadrature(cfg.coeffs.alpha, 1.0 / cfg.n_torus, None, cfg.R_torus)


def _cmd_cell(cfg: Config, args, out) -> int:
    co, quad = cfg.coeffs, _torus_quad(cfg)
    if cfg.method == "discounted":
        sol = estimate_d(co, quad, cfg.schedule, cfg.I, cfg.n_torus, gap_bound=cfg.gap_bound)
    else:
        sol = solve_cell_direct(co, quad, cfg.I, cfg.n_torus)
    out(f"method: {sol.method}")
    out(f"I: {fmt_float(cfg.I)}")
    out(f"d: {fmt_float(sol.d)}")
    out(f"rho: {fmt_float(sol.rho)}")
    if sol.trace:
        out("trace: lambda, min lambda*u, max lambda*u")
        for lam, lo, hi in sol.trace:
            out(f"  {fmt_float(lam)}, {fmt_float(lo)}, {fmt_float(hi)}")
    else:
        out("trace: none (bordered direct solve)")
    return 0


def _cmd_effective(cfg: Config, args, out) -> int:
    op = build_effective(cfg.coeffs, _torus_quad(cfg), cfg.I_samples, cfg.n_torus,
                         method=cfg.method, schedule=cfg.schedule)
    pairs = [(I, 1.0) for I in cfg.I_samples]
    cert = check_subellipticity(op, cfg.coeffs.c0, pairs, tol=1e-9)
    out(f"c_bar: {fmt_float(op.c_bar)}")
    out(f"g_bar: {fmt_float(op.g_bar)}")
    out(f"fit_residual: {fmt_float(op.fit_residual)}")
    out(f"certificate: theta = c0 = {fmt_float(cert.theta)}, margin = {fmt_float(op.theta_certificate.margin)}, "
        f"slope check {'pass' if op.theta_certificate.slope_check else 'fail'}")
    if not op.theta_certificate.slope_check:
        print("effective operator failed the subellipticity certificate", file=sys.stderr)
        return 1
    return 0


def _cmd_solve(cfg: Config, args, out) -> int:
    co = cfg.coeffs
    h = cfg.epsilon / cfg.refinement
    quad = build_quadrature(co.alpha, h, cfg.zeta_factor * h, cfg.R)
    if args.debug_tamper:
        quad = tampered_quadrature(quad)
    p = make_problem(co, cfg.epsilon, cfg.refinement, cfg.domain, quad=quad)
    rep = solve(p)
    out_dir = Path(cfg.out_dir)
    rep.to_csv(out_dir / "solution.csv")
    if "json" in cfg.formats:
        atomic_write_text(out_dir / "solution.json", dump_json(rep.summary()) + "\n")
    out(f"epsilon: {fmt_float(cfg.epsilon)}")
    out(f"sup_residual: {fmt_float(rep.sup_residual)}")
    out(f"wrote {out_dir / 'solution.csv'}")
    return 0


def _cmd_homogenize(cfg: Config, args, out) -> int:
    sweep = SweepConfig(
        epsilons=cfg.epsilons, refinement=cfg.refinement, margin=cfg.margin, domain=cfg.domain, R=cfg.R,
        zeta_factor=cfg.zeta_factor, n_torus=cfg.n_torus, R_torus=cfg.R_torus, cell_method=cfg.method,
        tamper=args.debug_tamper,
    )
    table = run_sweep(cfg.coeffs, sweep)
    if table.failures:
        for r in table.failures:
            print(f"eps={fmt_float(r.epsilon)}: {r.error}", file=sys.stderr)
        print(f"{len(table.failures)} of {len(table.rows)} rows failed; nothing written", file=sys.stderr)
        return 1
    # render everything first so that a formatting error leaves no partial output
    texts = {fmt: render(table, fmt, timings=args.timings) for fmt in cfg.formats}
    out_dir = Path(cfg.out_dir)
    for fmt, text in texts.items():
        atomic_write_text(out_dir / f"convergence.{fmt}", text)
    out("epsilon, err_sup, err_interior")
    for r in table.rows:
        out(f"  {fmt_float(r.epsilon)}, {fmt_float(r.err_sup)}, {fmt_float(r.err_interior)}")
    out(f"wrote {', '.join(str(out_dir / f'convergence.{f}') for f in texts)}")
    return 0


def _cmd_split_check(cfg: Config, args, out) -> int:
    n = min(cfg.n_torus, 1024)
    checks = split_battery(cfg.coeffs.alpha, n=n, R=cfg.R_torus)
    ok = True
    out("k-mode point, nu, delta, lower slack, upper slack, identity error")
    for c in checks:
        ok &= c.passed
        out(f"  {'PASS' if c.passed else 'FAIL'} x={fmt_float(c.point / n)}, nu={fmt_float(c.nu)}, "
            f"delta={c.delta:.6g}, {c.lower_slack:.3e}, {c.upper_slack:.3e}, {c.identity_error:.3e}")
    out(f"{len(checks)} split checks, {'all passed' if ok else 'FAILURES'}")
    return 0 if ok else 1


HANDLERS = {
    "cell": _cmd_cell,
    "effective": _cmd_effective,
    "solve": _cmd_solve,
    "homogenize": _cmd_homogenize,
    "split-check": _cmd_split_check,
}


def dispatch(command: str, cfg: Config | None, args=None, out=print) -> int:
    """Run ``command`` and map failures to exit codes."""
    args = args or build_parser().parse_args([command])
    try:
        if command == "selftest":
            return 0 if run_selftest(out) else 1
        return HANDLERS[command](cfg, args, out)
    except ComputationError as err:
        print(f"{type(err).__name__}: {err}", file=sys.stderr)
        return 1
    except InputError as err:
        print(f"{type(err).__name__}: {err}", file=sys.stderr)
        return 2
    except OSError as err:
        print(f"I/O error: {err}", file=sys.stderr)
        return 2


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    cfg = None
    if args.command != "selftest" or args.config:
        if not args.config:
            print("error: --config is required", file=sys.stderr)
            return 2
        try:
            cfg = load_config(args.config)
        except ConfigError as err:
            print(f"config error in {err.key}: {err.reason}", file=sys.stderr)
            return 2
        except InputError as err:
            print(f"config error: {err}", file=sys.stderr)
            return 2
        except OSError as err:
            print(f"cannot read config: {err}", file=sys.stderr)
            return 2
        changes = {}
        if args.out:
            changes["out_dir"] = args.out
        if args.method:
            changes["method"] = args.method
        cfg = dataclasses.replace(cfg, **changes)
    return dispatch(args.command, cfg, args)


if __name__ == "__main__":
    sys.exit(main())
