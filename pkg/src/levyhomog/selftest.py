"""Battery of closed-form identities, run by ``levyhomog selftest``.

Every check has an answer known without numerics (constants annihilated by the
operator, closed-form moments, constructed failures), so a failure here points
at a wiring bug rather than a discretization error.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .cell import CoefficientSet, estimate_d, solve_cell_direct, solve_discounted, solve_discounted_eikonal
from .config import parse_config
from .effective import EffectiveOperator, build_effective, check_subellipticity, eval_effective, harmonic_mean_oracle
from .errors import CertificateFailed, ConfigError, DomainError, InvalidParameter
from .exprs import ParseError, ParseErrorKind, evaluate, parse, validate_periodic
from .harness import CSV_HEADER, ConvergenceTable, SweepConfig, render, run_sweep
from .pide import comparison_trial, make_problem, solve
from .quadrature import (
    Domain, GridFunction, SplitParams, Torus, apply_levy, build_quadrature, eval_split, near_moment, tail_mass,
)

__all__ = ["Check", "CHECKS", "run_selftest"]


@dataclass(frozen=True)
class Check:
    name: str
    fn: Callable[[], bool]


def _close(a, b, tol=1e-12) -> bool:
    return abs(a - b) <= tol * max(1.0, abs(b))


def _raises(fn, exc, pred=lambda e: True) -> bool:
    try:
        fn()
    except exc as err:
        return pred(err)
    return False


def _const(alpha=1.0, c="1", g="0", a=None, phi="0", far=0.0) -> CoefficientSet:
    return CoefficientSet.from_strings(alpha, c, g, a, phi, far)


def _linear_symmetric() -> bool:
    h = 1 / 64
    q = build_quadrature(1.0, h, None, 1.0)
    grid = Domain(0.0, 1.0, h, q.reach, 0.0)
    u = 3 * grid.points()
    # drop the far-field tail: only the symmetric truncated stencil is tested
    Iu = apply_levy(q, GridFunction(grid, u)).values[grid.closed] + q.tail_mass * u[grid.closed]
    return float(np.abs(Iu).max()) <= 1e-9


def _split_example() -> bool:
    q = build_quadrature(1.0, 1 / 16, None, 1.0)
    u = GridFunction(Torus(16), np.zeros(16))
    sv = eval_split(q, u, 0, SplitParams(nu=0.5, delta=0.0, X=2.0))
    return _close(sv.I1_plus, 1.0) and _close(sv.I1_minus, 1.0)


def _split_identity() -> bool:
    q = build_quadrature(1.3, 1 / 32, None, 1.0)
    y = np.arange(32) / 32
    u = GridFunction(Torus(32), np.sin(2 * np.pi * y) + 0.3 * np.cos(6 * np.pi * y))
    sv = eval_split(q, u, 5, SplitParams(nu=0.25, delta=0.4, X=-1.0))
    return _close(sv.I1_plus - sv.I1_minus, 2 * 0.4 * near_moment(1.3, 0.25))


def _discount_const(c, g, I, lam, expect_u) -> bool:
    q = build_quadrature(1.0, 1 / 32, None, 8.0)
    u = solve_discounted(_const(c=c, g=g), q, lam, I, 32).values
    return float(np.abs(u - expect_u).max()) <= 1e-9 * expect_u


def _direct_const() -> bool:
    q = build_quadrature(0.7, 1 / 32, None, 8.0)
    sol = solve_cell_direct(_const(alpha=0.7, c="3", g="2"), q, 1.5, 32)
    return _close(sol.d, 2 + 3 * 1.5, 1e-10) and float(np.abs(sol.v.values).max()) <= 1e-10 and sol.rho <= 1e-10


def _shift_g() -> bool:
    q = build_quadrature(1.0, 1 / 64, None, 8.0)
    base = _const(c="2+cos(2*pi*y)", g="sin(2*pi*y)")
    shifted = _const(c="2+cos(2*pi*y)", g="sin(2*pi*y)+0.7")
    s0, s1 = solve_cell_direct(base, q, 0.5, 64), solve_cell_direct(shifted, q, 0.5, 64)
    return _close(s1.d - s0.d, 0.7, 1e-10) and float(np.abs(s1.v.values - s0.v.values).max()) <= 1e-10


def _discounted_const_d() -> bool:
    q = build_quadrature(1.0, 1 / 32, None, 8.0)
    return _close(estimate_d(_const(c="2", g="1"), q, None, 1.0, 32).d, 3.0, 1e-10)


def _eikonal_const() -> bool:
    q = build_quadrature(1.0, 1 / 32, None, 8.0)
    u = solve_discounted_eikonal(_const(g="5", a="1"), q, 0.01, 32).values
    return float(np.abs(0.01 * u - 5).max()) <= 1e-10


def _effective_const() -> bool:
    q = build_quadrature(1.0, 1 / 32, None, 8.0)
    op = build_effective(_const(c="4", g="1"), q, n=32)
    return _close(op.c_bar, 4, 1e-10) and _close(op.g_bar, 1, 1e-10) and op.fit_residual <= 1e-10


def _effective_slope() -> bool:
    q = build_quadrature(1.0, 1 / 32, None, 8.0)
    co = _const(c="2", g="1")
    op = build_effective(co, q, (-1.0, 0.0, 1.0), n=32)
    return abs(op.theta_certificate.margin) <= 1e-10


def _subellipticity_equal() -> bool:
    op = EffectiveOperator(g_bar=0.3, c_bar=2.0)
    return abs(check_subellipticity(op, 2.0, [(0.0, 1.0), (-1.0, 0.5)]).margin) <= 1e-12


def _pide_const() -> bool:
    co = _const(c="3", g="2", phi="2", far=2.0)
    u = solve(make_problem(co, 0.25, 8, R=1.0)).u.values
    return float(np.abs(u - 2).max()) <= 1e-12


def _effective_const_solution() -> bool:
    co = _const(c="3", g="0", phi="2", far=2.0)
    op = EffectiveOperator(g_bar=2.0, c_bar=7.0)
    u = solve(make_problem(co, 0.25, 8, R=1.0, effective=op)).u.values
    return float(np.abs(u - 2).max()) <= 1e-12


def _translation() -> bool:
    p1 = make_problem(_const(c="2+cos(2*pi*y)", g="sin(2*pi*y)", phi="x", far=0.0), 0.25, 8, R=1.0)
    p2 = make_problem(_const(c="2+cos(2*pi*y)", g="sin(2*pi*y)+1", phi="x+1", far=1.0), 0.25, 8, R=1.0)
    ok = comparison_trial(p1, p2)
    d = solve(p2).u.values - solve(p1).u.values
    return ok and float(np.abs(d - 1).max()) <= 1e-12


def _sweep_const() -> bool:
    co = _const(c="2", g="1", phi="0.5", far=0.5)
    table = run_sweep(co, SweepConfig(epsilons=(1 / 2, 1 / 4), refinement=8, R_torus=8, n_torus=64))
    return all(r.err_sup <= 1e-9 for r in table.rows)


def _csv_header() -> bool:
    from .harness import SweepRow

    rows = [SweepRow(2.0**-k, 2.0**-k / 16, 0.1, 0.05, 1e-14, 0.0) for k in range(2, 7)]
    lines = render(ConvergenceTable(rows), "csv").splitlines()
    return lines[0] == ",".join(CSV_HEADER) and len(lines) == 6 and all(len(l.split(",")) == 6 for l in lines)


_MINIMAL = '[problem]\nalpha = {alpha}\nc = "{c}"\ng = "sin(2*pi*y)"\nphi = "0"\nfar_field = 0\n'

CHECKS: tuple[Check, ...] = (
    Check("expr: 2+cos(2*pi*y) at 0 is 3", lambda: evaluate(parse("2+cos(2*pi*y)"), 0.0) == 3.0),
    Check("expr: sin(2*pi*y) at 0.25 is 1", lambda: _close(evaluate(parse("sin(2*pi*y)"), 0.25), 1.0, 1e-15)),
    Check("expr: '2*(3+' is an unbalanced paren", lambda: _raises(
        lambda: parse("2*(3+"), ParseError, lambda e: e.kind is ParseErrorKind.UnbalancedParen)),
    Check("expr: pi", lambda: evaluate(parse("pi"), 0.3) == 3.141592653589793),
    Check("expr: abs(-2)*3 is 6", lambda: evaluate(parse("abs(-2)*3"), 0.0) == 6.0),
    Check("expr: 1/y at 0 is a domain error", lambda: _raises(lambda: evaluate(parse("1/y"), 0.0), DomainError)),
    Check("periodic: cos(2*pi*y) passes", lambda: validate_periodic(parse("cos(2*pi*y)"), 64, 1e-9).passed),
    Check("periodic: y fails with deviation 1", lambda: (
        lambda r: not r.passed and _close(r.max_deviation, 1.0))(validate_periodic(parse("y"), 64, 1e-9))),
    Check("periodic: 2+0*y passes at tol 0", lambda: validate_periodic(parse("2+0*y"), 4, 0.0).passed),
    Check("tail_mass(1, 2) = 1", lambda: _close(tail_mass(1.0, 2.0), 1.0)),
    Check("tail_mass(0.5, 1) = 4", lambda: _close(tail_mass(0.5, 1.0), 4.0)),
    Check("tail_mass(1, 4) = 0.5", lambda: _close(tail_mass(1.0, 4.0), 0.5)),
    Check("near_moment(1, 0.5) = 1", lambda: _close(near_moment(1.0, 0.5), 1.0)),
    Check("near_moment(0.5, 1) = 4/3", lambda: _close(near_moment(0.5, 1.0), 4 / 3)),
    Check("near_moment(1.5, 1) = 4", lambda: _close(near_moment(1.5, 1.0), 4.0)),
    Check("I_h annihilates constants", lambda: (lambda q, g: float(np.abs(apply_levy(
        q, GridFunction(g, np.full(g.size, 7.0))).values[g.closed]).max()) == 0.0)(
        build_quadrature(1.0, 1 / 32, None, 1.0), Domain(0, 1, 1 / 32, 32, 7.0))),
    Check("I_h annihilates odd linear functions", _linear_symmetric),
    Check("split: X=2, delta=0, nu=0.5 gives I1 = 1", _split_example),
    Check("split: I1_plus - I1_minus = 2 delta near_moment", _split_identity),
    Check("discounted: c=1, g=2 gives lambda u = 2", lambda: _discount_const("1", "2", 0.0, 0.05, 40.0)),
    Check("discounted: c=3, I=1, lambda=0.1 gives u = 30", lambda: _discount_const("3", "0", 1.0, 0.1, 30.0)),
    Check("cell: constants give d = g0 + c0 I, v = 0", _direct_const),
    Check("cell: g + 0.7 shifts d by 0.7", _shift_g),
    Check("cell: discounted route on constants", _discounted_const_d),
    Check("eikonal: a=1, g=5 gives lambda u = 5", _eikonal_const),
    Check("effective: c=4, g=1 gives c_bar=4, g_bar=1", _effective_const),
    Check("effective: constant c has margin 0", _effective_slope),
    Check("effective: op(1, 4) at I=0 is -1", lambda: eval_effective(EffectiveOperator(1.0, 4.0), 0.0, 0.0) == -1.0),
    Check("effective: harmonic mean of 5 is 5", lambda: _close(harmonic_mean_oracle(_const(c="5"), 256)[0], 5.0)),
    Check("effective: equality case of subellipticity", _subellipticity_equal),
    Check("effective: c_bar=0.5 < c0=1 fails the certificate", lambda: _raises(
        lambda: check_subellipticity(EffectiveOperator(0.0, 0.5), 1.0, [(0.0, 1.0)]), CertificateFailed)),
    Check("pide: constant data solve to 2", _pide_const),
    Check("pide: g_bar=2, phi=2 gives u_bar = 2", _effective_const_solution),
    Check("pide: shifting g and phi by 1 shifts u by 1", _translation),
    Check("harness: constant coefficients have zero error", _sweep_const),
    Check("harness: CSV header and shape", _csv_header),
    Check("harness: empty table is refused", lambda: _raises(lambda: render(ConvergenceTable([]), "csv"), InvalidParameter)),
    Check("config: minimal file loads", lambda: parse_config(_MINIMAL.format(alpha=1, c="2+cos(2*pi*y)")).n_torus == 512),
    Check("config: alpha=2.5 rejected", lambda: _raises(
        lambda: parse_config(_MINIMAL.format(alpha=2.5, c="2")), ConfigError,
        lambda e: e.key == "alpha" and e.reason == "out of (0,2)")),
    Check("config: c=y rejected as not periodic", lambda: _raises(
        lambda: parse_config(_MINIMAL.format(alpha=1, c="y")), ConfigError,
        lambda e: e.key == "c" and e.reason.startswith("not periodic"))),
)


def run_selftest(out=print) -> bool:
    """Run every check, print one PASS/FAIL line each and return overall success."""
    ok = True
    for check in CHECKS:
        try:
            passed = bool(check.fn())
            note = ""
        except Exception as err:  # a crash is a failure of that check, not of the battery
            passed, note = False, f" ({type(err).__name__}: {err})"
        ok &= passed
        out(f"{'PASS' if passed else 'FAIL'}  {check.name}{note}")
    out(f"{sum(1 for _ in CHECKS)} checks, {'all passed' if ok else 'FAILURES'}")
    return ok
