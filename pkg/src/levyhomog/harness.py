"""Two-scale convergence experiments.

:func:`run_sweep` solves the oscillatory problem and the homogenized problem on
matched grids for a decreasing list of ``eps`` and tabulates their sup-norm
distance. :func:`corrector_diagnostic` checks the perturbed test function
``phi + eps^alpha v(x/eps)`` against the effective equation.
"""

from __future__ import annotations

import datetime as _dt
import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .cell import CoefficientSet, solve_cell_direct
from .effective import EffectiveOperator, build_effective
from .errors import ComputationError, InvalidParameter
from .exprs import Expr, evaluate_array, parse
from .io import atomic_write_text, dump_json, fmt_float
from .pide import make_problem, solve
from .quadrature import Domain, GridFunction, apply_levy, build_quadrature, tampered_quadrature

__all__ = [
    "SweepConfig",
    "SweepRow",
    "ConvergenceTable",
    "run_sweep",
    "CorrectorReport",
    "corrector_diagnostic",
    "emit",
    "render",
    "CSV_HEADER",
]

CSV_HEADER = ("epsilon", "h", "err_sup", "err_interior", "residual", "wall_time")


@dataclass(frozen=True)
class SweepConfig:
    epsilons: tuple[float, ...] = (1 / 4, 1 / 8, 1 / 16, 1 / 32, 1 / 64)
    refinement: int = 16
    margin: float = 0.1
    domain: tuple[float, float] = (0.0, 1.0)
    R: float = 1.0
    zeta_factor: float = 1.0
    n_torus: int = 512
    R_torus: float = 128.0
    cell_method: str = "direct"
    tamper: bool = False

    def __post_init__(self):
        if self.refinement < 8:
            raise InvalidParameter(f"refinement must be >= 8, got {self.refinement}")
        eps = self.epsilons
        if not eps:
            raise InvalidParameter("no epsilons given")
        if any(b >= a for a, b in zip(eps, eps[1:])):
            raise InvalidParameter("epsilons must be strictly decreasing")
        for e in eps:
            inv = 1.0 / e
            if abs(inv - round(inv)) > 1e-9 * inv:
                raise InvalidParameter(f"epsilon {e!r} is not the reciprocal of an integer")
        if not 0 <= self.margin < 0.5:
            raise InvalidParameter("margin must lie in [0, 0.5)")


@dataclass
class SweepRow:
    epsilon: float
    h: float
    err_sup: float
    err_interior: float
    residual: float
    wall_time: float
    error: str | None = None

    @property
    def failed(self) -> bool:
        return self.error is not None


@dataclass
class ConvergenceTable:
    rows: list[SweepRow]
    metadata: dict = field(default_factory=dict)

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(r, name) for r in self.rows])

    @property
    def failures(self) -> list[SweepRow]:
        return [r for r in self.rows if r.failed]


def _threads() -> int:
    try:
        return max(1, int(os.environ.get("LEVYHOMOG_THREADS", "1")))
    except ValueError:
        return 1


def effective_for(coeffs: CoefficientSet, sweep: SweepConfig) -> EffectiveOperator:
    quad = build_quadrature(coeffs.alpha, 1.0 / sweep.n_torus, None, sweep.R_torus)
    return build_effective(coeffs, quad, n=sweep.n_torus, method=sweep.cell_method)


def _sweep_row(coeffs: CoefficientSet, op: EffectiveOperator, sweep: SweepConfig, eps: float) -> SweepRow:
    t0 = time.perf_counter()
    h = eps / sweep.refinement
    try:
        quad = build_quadrature(coeffs.alpha, h, sweep.zeta_factor * h, sweep.R)
        if sweep.tamper:
            quad = tampered_quadrature(quad)
        p_eps = make_problem(coeffs, eps, sweep.refinement, sweep.domain, quad=quad)
        p_bar = make_problem(coeffs, eps, sweep.refinement, sweep.domain, effective=op, quad=quad)
        r_eps = solve(p_eps)
        r_bar = solve(p_bar)
    except ComputationError as err:
        return SweepRow(eps, h, math.nan, math.nan, math.nan, time.perf_counter() - t0,
                        error=f"{type(err).__name__}: {err}")
    x = p_eps.grid.points()
    diff = np.abs(r_eps.u.values - r_bar.u.values)
    closed = p_eps.grid.closed
    x_lo, x_hi = sweep.domain
    m = sweep.margin * (x_hi - x_lo)
    tol = 1e-12 * (x_hi - x_lo)
    inner = (x >= x_lo + m - tol) & (x <= x_hi - m + tol)
    err_sup = float(diff[closed].max())
    err_int = float(diff[inner].max()) if np.any(inner) else 0.0
    return SweepRow(eps, h, err_sup, err_int, r_eps.sup_residual, time.perf_counter() - t0)


def run_sweep(coeffs: CoefficientSet, sweep: SweepConfig | None = None,
              effective: EffectiveOperator | None = None) -> ConvergenceTable:
    """Tabulate ``||u_eps - u_bar||`` along ``sweep.epsilons``.

    The effective operator is built once (unless given). A row whose solve
    raises a computational error is kept with its error message instead of
    aborting the sweep. Rows may run in parallel (``LEVYHOMOG_THREADS``); the
    table is always ordered by decreasing ``eps``.
    """
    sweep = sweep or SweepConfig()
    t0 = time.perf_counter()
    op = effective or effective_for(coeffs, sweep)
    threads = _threads()
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            rows = list(pool.map(lambda e: _sweep_row(coeffs, op, sweep, e), sweep.epsilons))
    else:
        rows = [_sweep_row(coeffs, op, sweep, e) for e in sweep.epsilons]
    rows.sort(key=lambda r: -r.epsilon)
    cert = op.theta_certificate
    metadata = {
        "config": {
            **coeffs.describe(),
            "epsilons": list(sweep.epsilons),
            "refinement": sweep.refinement,
            "margin": sweep.margin,
            "domain": list(sweep.domain),
            "R": sweep.R,
            "zeta_factor": sweep.zeta_factor,
            "n_torus": sweep.n_torus,
            "R_torus": sweep.R_torus,
            "cell_method": sweep.cell_method,
        },
        "effective": {
            "c_bar": op.c_bar,
            "g_bar": op.g_bar,
            "theta": cert.theta if cert else math.nan,
            "margin": cert.margin if cert else math.nan,
        },
        "total_wall_time": time.perf_counter() - t0,
    }
    return ConvergenceTable(rows, metadata)


# --------------------------------------------------------------------------


@dataclass(frozen=True)
class CorrectorReport:
    epsilon: float
    gap: float
    rho: float
    g_bar: float
    c_bar: float
    threshold: float

    @property
    def passed(self) -> bool:
        return self.gap <= self.threshold


def corrector_diagnostic(coeffs: CoefficientSet, epsilon: float, testfn: Expr | str, *,
                         refinement: int = 16, R: float = 1.0, domain=(0.0, 1.0),
                         threshold: float = math.inf) -> CorrectorReport:
    """Residual gap between ``phi_eps = phi + eps^alpha v(x/eps)`` in the oscillatory
    equation and ``phi`` in the effective equation.

    The corrector is affine in the frozen value ``I = I_h[phi](x)``:
    ``v = v_0 + I (v_1 - v_0)`` with ``v_0, v_1`` the mean-zero cell correctors for
    ``I = 0`` and ``I = 1``. Cell problems are solved on the torus sampled at the
    same points as the ``eps``-grid (``refinement`` points per period), with a
    quadrature that is the rescaling of the domain quadrature, so the two
    discretizations match exactly. ``testfn`` should be negligible outside
    ``[x_lo - R, x_hi + R]``; it is treated as zero beyond.
    """
    if isinstance(testfn, str):
        testfn = parse(testfn, variable="x")
    alpha = coeffs.alpha
    eps = float(epsilon)
    h = eps / refinement
    periods = round(1.0 / eps)
    if abs(periods * eps - 1.0) > 1e-9:
        raise InvalidParameter(f"1/epsilon must be an integer, got {1 / eps!r}")

    quad_cell = build_quadrature(alpha, 1.0 / refinement, None, R * periods)
    c0 = solve_cell_direct(coeffs, quad_cell, 0.0, refinement)
    c1 = solve_cell_direct(coeffs, quad_cell, 1.0, refinement)
    g_bar, c_bar = c0.d, c1.d - c0.d
    v0, v1 = c0.v.values, c1.v.values - c0.v.values

    quad = build_quadrature(alpha, h, None, R)
    K = quad.reach
    x_lo, x_hi = domain
    wide = Domain(x_lo, x_hi, h, 2 * K, 0.0)
    xw = wide.points()
    phi_w = evaluate_array(testfn, xw)
    # I_h[phi] wherever the residual stencils will need phi_eps
    narrow = Domain(x_lo, x_hi, h, K, 0.0)
    sl = slice(K, K + narrow.size)
    I_phi = _apply_everywhere(quad, wide, phi_w)[sl]
    phase = x_lo / eps * refinement
    if abs(phase - round(phase)) > 1e-9 * max(1.0, abs(phase)):
        raise InvalidParameter("x_lo must sit on the fast-variable grid")
    j = np.arange(narrow.size) - K
    idx = (j + round(phase)) % refinement
    x_over_eps = x_lo / eps + j / refinement
    v_fast = v0[idx] + I_phi * v1[idx]
    phi_n = phi_w[sl]
    phi_eps = phi_n + eps**alpha * v_fast

    interior = narrow.interior
    c = evaluate_array(coeffs.c, x_over_eps[interior])
    g = evaluate_array(coeffs.g, x_over_eps[interior])
    I_eps = apply_levy(quad, GridFunction(narrow, phi_eps)).values[interior]
    res_eps = phi_eps[interior] - c * I_eps - g
    res_bar = phi_n[interior] - g_bar - c_bar * I_phi[interior]
    gap = float(np.abs(res_eps - res_bar).max())
    return CorrectorReport(eps, gap, max(c0.rho, c1.rho), g_bar, c_bar, threshold)


def _apply_everywhere(quad, grid: Domain, values: np.ndarray) -> np.ndarray:
    """``I_h`` at every point whose stencil fits in ``grid`` (NaN elsewhere)."""
    s = quad.stencil()
    K = len(s) - 1
    out = np.full(len(values), np.nan)
    lo, hi = K, len(values) - K
    center = values[lo:hi]
    acc = quad.tail_mass * (grid.far_field - center)
    for k in range(1, K + 1):
        acc = acc + s[k] * ((values[lo + k:hi + k] - center) + (values[lo - k:hi - k] - center))
    out[lo:hi] = acc
    return out


# --------------------------------------------------------------------------
# emission


def _csv_text(table: ConvergenceTable, timings: bool) -> str:
    lines = [",".join(CSV_HEADER)]
    for r in table.rows:
        wt = r.wall_time if timings else 0.0
        vals = (r.epsilon, r.h, r.err_sup, r.err_interior, r.residual, wt)
        lines.append(",".join(fmt_float(v) for v in vals))
    return "\n".join(lines) + "\n"


def _json_text(table: ConvergenceTable, timings: bool) -> str:
    meta = dict(table.metadata)
    rows = []
    for r in table.rows:
        d = asdict(r)
        if not timings:
            d["wall_time"] = 0.0
        rows.append(d)
    doc = {
        "config": meta.get("config", {}),
        "effective": meta.get("effective", {}),
        "rows": rows,
        "metadata": {
            "created": _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds"),
            "wall_times": [r.wall_time for r in table.rows],
            "total_wall_time": meta.get("total_wall_time", math.nan),
        },
    }
    return dump_json(doc) + "\n"


def _svg_text(table: ConvergenceTable) -> str:
    W, H = 800, 600
    left, right, top, bottom = 90, 40, 40, 70
    ok = [r for r in table.rows if not r.failed and r.err_interior > 0 and r.err_sup > 0]
    series = {
        "err_sup": [(r.epsilon, r.err_sup) for r in ok],
        "err_interior": [(r.epsilon, r.err_interior) for r in ok],
    }
    pts = [p for s in series.values() for p in s]
    if pts:
        lx = [math.log10(p[0]) for p in pts]
        ly = [math.log10(p[1]) for p in pts]
        x0, x1 = math.floor(min(lx)), math.ceil(max(lx))
        y0, y1 = math.floor(min(ly)), math.ceil(max(ly))
    else:
        x0, x1, y0, y1 = -2, 0, -3, 0
    x1 = x1 if x1 > x0 else x0 + 1
    y1 = y1 if y1 > y0 else y0 + 1

    def sx(e):
        return left + (math.log10(e) - x0) / (x1 - x0) * (W - left - right)

    def sy(v):
        return H - bottom - (math.log10(v) - y0) / (y1 - y0) * (H - top - bottom)

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">',
        f'<rect x="0" y="0" width="{W}" height="{H}" fill="white"/>',
        f'<line x1="{left}" y1="{H - bottom}" x2="{W - right}" y2="{H - bottom}" stroke="black"/>',
        f'<line x1="{left}" y1="{top}" x2="{left}" y2="{H - bottom}" stroke="black"/>',
    ]
    for k in range(x0, x1 + 1):
        px = left + (k - x0) / (x1 - x0) * (W - left - right)
        out.append(f'<text x="{px:.2f}" y="{H - bottom + 20}" font-size="12" text-anchor="middle">1e{k}</text>')
    for k in range(y0, y1 + 1):
        py = H - bottom - (k - y0) / (y1 - y0) * (H - top - bottom)
        out.append(f'<text x="{left - 8}" y="{py + 4:.2f}" font-size="12" text-anchor="end">1e{k}</text>')
    out.append(f'<text x="{(W + left - right) / 2:.1f}" y="{H - 20}" font-size="14" text-anchor="middle">epsilon</text>')
    out.append(
        f'<text x="20" y="{(H + top - bottom) / 2:.1f}" font-size="14" text-anchor="middle" '
        f'transform="rotate(-90 20 {(H + top - bottom) / 2:.1f})">sup-norm error |u_eps - u_bar|</text>'
    )
    colors = {"err_sup": "#1f77b4", "err_interior": "#d62728"}
    for i, (name, s) in enumerate(series.items()):
        if not s:
            continue
        poly = " ".join(f"{sx(e):.2f},{sy(v):.2f}" for e, v in s)
        out.append(f'<polyline points="{poly}" fill="none" stroke="{colors[name]}" stroke-width="2"/>')
        out.append(f'<text x="{W - right - 150}" y="{top + 20 + 18 * i}" font-size="12" fill="{colors[name]}">{name}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def render(table: ConvergenceTable, fmt: str, *, timings: bool = False) -> str:
    if not table.rows:
        raise InvalidParameter("cannot emit an empty table")
    if fmt == "csv":
        return _csv_text(table, timings)
    if fmt == "json":
        return _json_text(table, timings)
    if fmt == "svg":
        return _svg_text(table)
    raise InvalidParameter(f"unknown format {fmt!r}")


def emit(table: ConvergenceTable, fmt: str, path, *, timings: bool = False) -> None:
    """Write ``table`` as csv, json or svg.

    CSV and SVG are byte-deterministic. By default the CSV ``wall_time`` column
    is written as 0 so that repeated runs compare equal; measured times always
    go to the JSON ``metadata`` block. Pass ``timings=True`` to keep them in the
    CSV as well.
    """
    text = render(table, fmt, timings=timings)
    atomic_write_text(Path(path), text)
