"""Dirichlet problems on an interval with nonlocal exterior data.

Oscillatory problem::

    u - c(x/eps) I[u](x) - g(x/eps) = 0   in (x_lo, x_hi),   u = phi outside,

and the homogenized problem with the affine effective operator::

    u - c_bar I[u](x) - g_bar = 0.

Both are discretized with the monotone Levy quadrature, so the interior system
is an M-matrix and the discrete comparison principle holds.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Union

import numpy as np

from .cell import CoefficientSet, _lu_solve
from .effective import EffectiveOperator
from .errors import InvalidParameter, NotConverged, OrderingViolated, SingularSystem
from .exprs import evaluate_array, to_source
from .io import atomic_write_text, fmt_float
from .quadrature import (
    Domain, GridFunction, LevyQuadrature, apply_levy, assert_m_matrix, build_quadrature, domain_matrix,
)

__all__ = [
    "Oscillatory",
    "Effective",
    "ProblemInstance",
    "SolveReport",
    "make_problem",
    "solve_eps_problem",
    "solve_effective",
    "solve",
    "comparison_trial",
]

MAX_DENSE = 4096


@dataclass(frozen=True)
class Oscillatory:
    epsilon: float


@dataclass(frozen=True)
class Effective:
    operator: EffectiveOperator


@dataclass(frozen=True, eq=False)
class ProblemInstance:
    coeffs: CoefficientSet
    domain: tuple[float, float]
    h: float
    quad: LevyQuadrature
    mode: Union[Oscillatory, Effective]
    epsilon: float = 1.0
    grid: Domain = field(init=False)

    def __post_init__(self):
        x_lo, x_hi = self.domain
        if not x_hi > x_lo:
            raise InvalidParameter(f"empty domain {self.domain!r}")
        if abs(self.quad.h - self.h) > 1e-12 * self.h:
            raise InvalidParameter("quadrature spacing differs from the problem spacing")
        m = (x_hi - x_lo) / self.h
        if abs(m - round(m)) > 1e-9 * m or round(m) < 2:
            raise InvalidParameter(f"domain length is not a multiple (>= 2) of h={self.h!r}")
        _check_ratio(1.0 / self.epsilon, "1/epsilon")
        _check_ratio(self.epsilon / self.h, "epsilon/h")
        grid = Domain(x_lo, x_hi, self.h, self.quad.reach, self.coeffs.far_field)
        object.__setattr__(self, "grid", grid)

    @property
    def refinement(self) -> int:
        return round(self.epsilon / self.h)

    def fast_variable(self) -> np.ndarray:
        """``x/eps`` at every grid point, computed from integer indices so it matches
        the torus points ``j/refinement`` exactly up to the shift ``x_lo/eps``."""
        g = self.grid
        j = np.arange(g.size) - g.halo
        return self.domain[0] / self.epsilon + j / self.refinement

    def exterior_values(self) -> np.ndarray:
        """Grid function holding phi on the exterior and zeros on the interior."""
        g = self.grid
        vals = np.zeros(g.size)
        mask = g.exterior_mask()
        vals[mask] = evaluate_array(self.coeffs.phi, g.points()[mask])
        return vals

    def coefficients(self) -> tuple[np.ndarray, np.ndarray]:
        """``(c, g)`` at the interior unknowns for the current mode."""
        n_int = self.grid.m - 1
        if isinstance(self.mode, Effective):
            op = self.mode.operator
            return np.full(n_int, op.c_bar), np.full(n_int, op.g_bar)
        y = self.fast_variable()[self.grid.interior]
        return evaluate_array(self.coeffs.c, y), evaluate_array(self.coeffs.g, y)


def _check_ratio(value: float, what: str):
    if not value >= 1 - 1e-9 or abs(value - round(value)) > 1e-9 * value:
        raise InvalidParameter(f"{what} must be a positive integer, got {value!r}")


def make_problem(coeffs: CoefficientSet, epsilon: float = 1.0, refinement: int = 16,
                 domain: tuple[float, float] = (0.0, 1.0), R: float = 1.0, zeta_factor: float = 1.0,
                 effective: EffectiveOperator | None = None, quad: LevyQuadrature | None = None) -> ProblemInstance:
    """Problem on the grid ``h = epsilon / refinement``.

    With ``effective`` given, the instance is the homogenized problem on the same
    grid and halo as the oscillatory one.
    """
    eps = float(Fraction(epsilon).limit_denominator(1 << 20))
    h = eps / refinement
    if quad is None:
        quad = build_quadrature(coeffs.alpha, h, zeta_factor * h, R)
    mode = Effective(effective) if effective is not None else Oscillatory(eps)
    return ProblemInstance(coeffs, tuple(domain), h, quad, mode, eps)


@dataclass(frozen=True, eq=False)
class SolveReport:
    u: GridFunction
    sup_residual: float
    stats: dict
    wall_time: float

    def x(self) -> np.ndarray:
        return self.u.grid.points()

    def closed_values(self) -> tuple[np.ndarray, np.ndarray]:
        sl = self.u.grid.closed
        return self.x()[sl], self.u.values[sl]

    def to_csv(self, path) -> None:
        xs, us = self.closed_values()
        lines = ["x,u"] + [f"{fmt_float(a)},{fmt_float(b)}" for a, b in zip(xs, us)]
        atomic_write_text(path, "\n".join(lines) + "\n")

    def summary(self) -> dict:
        return {"sup_residual": self.sup_residual, "wall_time": self.wall_time, **self.stats}

    def to_json(self, path) -> None:
        atomic_write_text(path, json.dumps(self.summary(), indent=2, sort_keys=True) + "\n")


def _jacobi(S: np.ndarray, rhs: np.ndarray, omega: float = 0.8, tol: float = 1e-12, max_iters: int = 200_000):
    d = np.diag(S)
    u = rhs / d
    for it in range(max_iters):
        r = rhs - S @ u
        if np.abs(r).max() <= tol * (np.abs(rhs).max() + 1.0):
            return u, it
        u = u + omega * r / d
    raise NotConverged(f"damped Jacobi did not converge in {max_iters} iterations")


def residual(p: ProblemInstance, full: np.ndarray) -> np.ndarray:
    """``u - c I_h[u] - g`` at the interior points for a full grid function."""
    c, g = p.coefficients()
    Iu = apply_levy(p.quad, GridFunction(p.grid, full)).values[p.grid.interior]
    return full[p.grid.interior] - c * Iu - g


def solve(p: ProblemInstance, *, tol: float = 1e-10) -> SolveReport:
    """Assemble and solve the interior M-matrix system for either mode."""
    t0 = time.perf_counter()
    grid = p.grid
    c, g = p.coefficients()
    ext = p.exterior_values()
    A = domain_matrix(p.quad, grid)
    S = np.eye(len(c)) - c[:, None] * A
    assert_m_matrix(S, what="Dirichlet")
    b_ext = apply_levy(p.quad, GridFunction(grid, ext)).values[grid.interior]
    rhs = g + c * b_ext
    if len(c) <= MAX_DENSE:
        u_int = _lu_solve(S, rhs)
        stats = {"method": "lu", "unknowns": len(c)}
    else:
        u_int, its = _jacobi(S, rhs)
        stats = {"method": "jacobi", "unknowns": len(c), "iterations": its}
    full = ext.copy()
    full[grid.interior] = u_int
    res = float(np.abs(residual(p, full)).max())
    scale = max(1.0, float(np.abs(g).max()), float(np.abs(ext).max()))
    if res > tol * scale:
        raise SingularSystem(f"Dirichlet solve residual {res:.3g} exceeds {tol * scale:.3g}")
    return SolveReport(GridFunction(grid, full), res, stats, time.perf_counter() - t0)


def solve_eps_problem(p: ProblemInstance) -> SolveReport:
    if not isinstance(p.mode, Oscillatory):
        raise InvalidParameter("solve_eps_problem needs an oscillatory instance")
    return solve(p)


def solve_effective(p: ProblemInstance) -> SolveReport:
    if not isinstance(p.mode, Effective):
        raise InvalidParameter("solve_effective needs an effective instance")
    cert = p.mode.operator.theta_certificate
    if cert is not None and not cert.slope_check:
        raise InvalidParameter("effective operator failed its subellipticity certificate")
    return solve(p)


def _geometry(g: Domain) -> tuple:
    return g.x_lo, g.x_hi, g.h, g.halo


def comparison_trial(p1: ProblemInstance, p2: ProblemInstance, tol: float = 1e-12) -> bool:
    """Solve both instances and check ``u1 <= u2 + tol`` everywhere.

    The data must be ordered (``g1 <= g2`` on the grid, ``phi1 <= phi2`` on the
    exterior, far fields ordered); a violation of the solution ordering means
    the scheme lost monotonicity and raises :class:`OrderingViolated`.
    """
    if _geometry(p1.grid) != _geometry(p2.grid) or to_source(p1.coeffs.c) != to_source(p2.coeffs.c) or p1.coeffs.alpha != p2.coeffs.alpha:
        raise InvalidParameter("comparison instances must share grid, c and alpha")
    c1, g1 = p1.coefficients()
    _, g2 = p2.coefficients()
    mask = p1.grid.exterior_mask()
    e1, e2 = p1.exterior_values()[mask], p2.exterior_values()[mask]
    if np.any(g1 > g2) or np.any(e1 > e2) or p1.coeffs.far_field > p2.coeffs.far_field:
        raise InvalidParameter("comparison data are not ordered")
    u1 = solve(p1).u.values
    u2 = solve(p2).u.values
    excess = float(np.max(u1 - u2))
    if excess > tol:
        i = int(np.argmax(u1 - u2))
        raise OrderingViolated(f"u1 exceeds u2 by {excess:.3g} at x={p1.grid.points()[i]:.6g}")
    return True
