"""Periodic cell problem on the unit torus.

For fixed ``I`` the cell problem asks for the unique constant ``d`` such that

    d - c(y) I[v](y) - g(y) - c(y) I = 0

has a periodic solution ``v``. Two independent routes are provided: the
vanishing-discount limit ``lambda u_lambda -> d`` (:func:`estimate_d`) and a
direct solve of the bordered system with the mean-zero constraint
(:func:`solve_cell_direct`). :func:`solve_discounted_eikonal` handles the
discounted problem with the extra first-order term ``a(y)|u'|``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .errors import InvalidParameter, NotConverged, OrderingViolated, SingularSystem
from .exprs import Expr, evaluate_array, parse, to_source, validate_periodic
from .quadrature import GridFunction, LevyQuadrature, Torus, assert_m_matrix, torus_matrix

__all__ = [
    "CoefficientSet",
    "DiscountSchedule",
    "CellSolution",
    "solve_discounted",
    "estimate_d",
    "solve_cell_direct",
    "solve_discounted_eikonal",
]

MAX_DENSE = 4096
_LOWER_BOUND_SAMPLES = 4096


@dataclass(frozen=True, eq=False)
class CoefficientSet:
    alpha: float
    c: Expr
    g: Expr
    a: Expr | None = None
    phi: Expr = field(default_factory=lambda: parse("0", variable="x"))
    far_field: float = 0.0
    c0: float = field(init=False)
    a0: float | None = field(init=False)

    def __post_init__(self):
        if not 0 < self.alpha < 2:
            raise InvalidParameter(f"alpha must lie in (0, 2), got {self.alpha!r}")
        for name in ("c", "g", "a"):
            e = getattr(self, name)
            if e is None:
                continue
            report = validate_periodic(e, 64, 1e-9)
            if not report.passed:
                raise InvalidParameter(f"{name} is not 1-periodic (max deviation {report.max_deviation:.3g})")
        y = np.arange(_LOWER_BOUND_SAMPLES) / _LOWER_BOUND_SAMPLES
        c0 = float(np.min(evaluate_array(self.c, y)))
        if not c0 > 0:
            raise InvalidParameter(f"c must be bounded below by a positive constant, min is {c0!r}")
        object.__setattr__(self, "c0", c0)
        a0 = None
        if self.a is not None:
            a0 = float(np.min(evaluate_array(self.a, y)))
            if not a0 > 0:
                raise InvalidParameter(f"a must be bounded below by a positive constant, min is {a0!r}")
        object.__setattr__(self, "a0", a0)

    @classmethod
    def from_strings(cls, alpha: float, c: str, g: str, a: str | None = None,
                     phi: str = "0", far_field: float = 0.0) -> "CoefficientSet":
        return cls(
            alpha=float(alpha), c=parse(c), g=parse(g),
            a=parse(a) if a is not None else None,
            phi=parse(phi, variable="x"), far_field=float(far_field),
        )

    def sample(self, n: int) -> tuple[np.ndarray, np.ndarray]:
        """``(c, g)`` at the ``n`` torus points ``j/n``."""
        y = np.arange(n) / n
        return evaluate_array(self.c, y), evaluate_array(self.g, y)

    def with_g(self, g: Expr) -> "CoefficientSet":
        return CoefficientSet(self.alpha, self.c, g, self.a, self.phi, self.far_field)

    def describe(self) -> dict:
        out = {"alpha": self.alpha, "c": to_source(self.c), "g": to_source(self.g)}
        if self.a is not None:
            out["a"] = to_source(self.a)
        out["phi"] = to_source(self.phi)
        out["far_field"] = self.far_field
        return out


@dataclass(frozen=True)
class DiscountSchedule:
    lambda_values: tuple[float, ...]
    extrapolation_order: int = 1

    def __post_init__(self):
        lams = self.lambda_values
        if len(lams) < self.extrapolation_order + 1:
            raise InvalidParameter("schedule is too short for the extrapolation order")
        if any(not 0 < v < 1 for v in lams):
            raise InvalidParameter("discount factors must lie in (0, 1)")
        if any(b >= a for a, b in zip(lams, lams[1:])):
            raise InvalidParameter("discount factors must be strictly decreasing")

    @classmethod
    def geometric(cls, start: float = 1e-1, stop: float = 1e-4, ratio: float = 0.5,
                  extrapolation_order: int = 1) -> "DiscountSchedule":
        """``start, start*ratio, ...`` while above ``stop``, then ``stop`` itself."""
        vals = []
        v = start
        while v > stop * (1 + 1e-9):
            vals.append(v)
            v *= ratio
        vals.append(stop)
        return cls(tuple(vals), extrapolation_order)


@dataclass(frozen=True, eq=False)
class CellSolution:
    d: float
    v: GridFunction
    rho: float
    trace: tuple[tuple[float, float, float], ...] = ()
    method: str = "direct"


# --------------------------------------------------------------------------


def _check_n(n: int):
    if n < 8:
        raise InvalidParameter(f"torus needs at least 8 points, got {n}")
    if n > MAX_DENSE:
        raise InvalidParameter(f"dense cell solves are limited to n <= {MAX_DENSE}, got {n}")


def _lu_solve(A: np.ndarray, b: np.ndarray) -> np.ndarray:
    try:
        x = scipy.linalg.solve(A, b, check_finite=True)
    except (np.linalg.LinAlgError, scipy.linalg.LinAlgError) as err:
        raise SingularSystem(str(err)) from err
    if not np.all(np.isfinite(x)):
        raise SingularSystem("non-finite solution")
    return x


def _backward_error(A, x, b) -> float:
    r = A @ x - b
    scale = np.abs(A).sum(axis=1).max() * np.abs(x).max() + np.abs(b).max()
    return float(np.abs(r).max() / scale) if scale > 0 else 0.0


def _discounted_parts(L, c, f, lam):
    """Solve ``(lam - c L) u = f`` as ``u = kappa + z`` with ``sum(z / c) = 0``.

    ``kappa`` carries the ``1/lam`` growth exactly, so ``z`` stays O(1) and the
    residual is not polluted by cancellation at small ``lam``.
    """
    inv_c = 1.0 / c
    kappa = float(np.sum(f * inv_c) / (lam * np.sum(inv_c)))
    A = lam * np.eye(len(c)) - c[:, None] * L
    assert_m_matrix(A, what="discounted cell")
    B = lam * np.diag(inv_c) - L
    rhs = (f - lam * kappa) * inv_c
    z = _lu_solve(B, rhs)
    if _backward_error(B, z, rhs) > 1e-12:
        raise SingularSystem("discounted cell solve did not reach backward error 1e-12")
    return kappa, z


def _check_discounted_bound(lam, kappa, z, f):
    lu = lam * (kappa + z)
    bound = np.abs(f).max()
    if np.abs(lu).max() > bound * (1 + 1e-9) + 1e-12:
        raise OrderingViolated(
            f"discrete maximum principle violated: sup|lambda u| = {np.abs(lu).max():.6g} > {bound:.6g}"
        )


def solve_discounted(coeffs: CoefficientSet, quad: LevyQuadrature, lam: float, I: float, n: int) -> GridFunction:
    """Solve ``lam u - c I_h[u] = g + c I`` on the torus with ``n`` points."""
    if not 0 < lam < 1:
        raise InvalidParameter(f"lambda must lie in (0, 1), got {lam!r}")
    _check_n(n)
    L = torus_matrix(quad, n)
    c, g = coeffs.sample(n)
    f = g + c * I
    kappa, z = _discounted_parts(L, c, f, lam)
    _check_discounted_bound(lam, kappa, z, f)
    return GridFunction(Torus(n), kappa + z)


def _richardson(lams, means, order):
    """Extrapolate ``means(lam)`` to ``lam = 0`` using windows of ``order + 1`` points.

    Returns the estimate from every window, last window last.
    """
    lams = np.asarray(lams, dtype=float)
    means = np.asarray(means, dtype=float)
    out = []
    for start in range(len(lams) - order):
        x = lams[start:start + order + 1]
        p = list(means[start:start + order + 1])
        # Neville's scheme evaluated at 0
        for j in range(1, order + 1):
            for i in range(order, j - 1, -1):
                p[i] = (x[i] * p[i - 1] - x[i - j] * p[i]) / (x[i] - x[i - j])
        out.append(p[order])
    return out


def _cell_residual(L, c, g, I, d, v) -> float:
    return float(np.abs(d - c * (L @ v) - g - c * I).max())


def estimate_d(coeffs: CoefficientSet, quad: LevyQuadrature, schedule: DiscountSchedule | None = None,
               I: float = 0.0, n: int = 512, *, gap_bound: float = 5e-2,
               cauchy_tol: float = 1e-6) -> CellSolution:
    """Ergodic constant by the vanishing-discount method.

    Runs the discounted solve along ``schedule``; ``d`` is the Richardson
    extrapolation of the torus average of ``lambda u_lambda``. The corrector is
    ``u_lambda`` at the smallest ``lambda`` with its mean removed.
    """
    schedule = schedule or DiscountSchedule.geometric()
    _check_n(n)
    L = torus_matrix(quad, n)
    c, g = coeffs.sample(n)
    f = g + c * I
    trace = []
    means = []
    z_last = None
    for lam in schedule.lambda_values:
        kappa, z = _discounted_parts(L, c, f, lam)
        _check_discounted_bound(lam, kappa, z, f)
        lu = lam * kappa + lam * z
        trace.append((lam, float(lu.min()), float(lu.max())))
        means.append(lam * kappa + lam * float(np.mean(z)))
        z_last = z
    estimates = _richardson(schedule.lambda_values, means, schedule.extrapolation_order)
    d = float(estimates[-1])
    scale = max(1.0, abs(d))
    if len(estimates) > 1 and abs(estimates[-1] - estimates[-2]) > cauchy_tol * scale:
        raise NotConverged(
            f"extrapolated ergodic constant is not settling: last two estimates "
            f"{estimates[-2]!r}, {estimates[-1]!r}"
        )
    gap = trace[-1][2] - trace[-1][1]
    if gap > gap_bound:
        raise NotConverged(f"uniformity gap {gap:.3g} at lambda={trace[-1][0]:g} exceeds {gap_bound:g}")
    v = z_last - np.mean(z_last)
    rho = _cell_residual(L, c, g, I, d, v)
    return CellSolution(d, GridFunction(Torus(n), v), rho, tuple(trace), method="discounted")


def solve_cell_direct(coeffs: CoefficientSet, quad: LevyQuadrature, I: float = 0.0, n: int = 512) -> CellSolution:
    """Solve the cell problem and the mean-zero condition together for ``(v, d)``."""
    _check_n(n)
    L = torus_matrix(quad, n)
    c, g = coeffs.sample(n)
    inv_c = 1.0 / c
    M = np.zeros((n + 1, n + 1))
    M[:n, :n] = L
    M[:n, n] = -inv_c
    M[n, :n] = 1.0 / n
    rhs = np.empty(n + 1)
    rhs[:n] = -(g * inv_c + I)
    rhs[n] = 0.0
    sol = _lu_solve(M, rhs)
    v, d = sol[:n], float(sol[n])
    rho = _cell_residual(L, c, g, I, d, v)
    if rho > 1e-10 * max(1.0, np.abs(g).max() + np.abs(c).max() * abs(I)):
        raise SingularSystem(f"direct cell solve residual {rho:.3g} exceeds 1e-10")
    return CellSolution(d, GridFunction(Torus(n), v), rho, (), method="direct")


# --------------------------------------------------------------------------
# eikonal variant


def _upwind_candidates(z, h):
    back = (z - np.roll(z, 1)) / h
    fwd = (z - np.roll(z, -1)) / h
    return np.stack([np.zeros_like(z), back, fwd])


def _policy_matrix(L, a, h, lam, policy):
    n = len(a)
    B = lam * np.eye(n) - L
    idx = np.arange(n)
    coef = a / h
    active = policy != 0
    B[idx[active], idx[active]] += coef[active]
    nb = np.where(policy == 1, (idx - 1) % n, (idx + 1) % n)
    B[idx[active], nb[active]] -= coef[active]
    return B


def solve_discounted_eikonal(coeffs: CoefficientSet, quad: LevyQuadrature, lam: float, n: int,
                             *, tol: float = 1e-9, max_iters: int = 100) -> GridFunction:
    """Solve ``lam u + a(y)|u'| - I_h[u] - g = 0`` on the torus.

    ``|u'|`` is the monotone upwind magnitude ``max(D^- u, -D^+ u, 0)``. The
    max over the three linear branches is resolved by policy iteration: each
    step solves the M-matrix system for the current branch choice and then
    re-selects the maximizing branch pointwise, until the choice is stable.
    """
    if coeffs.a is None:
        raise InvalidParameter("the eikonal variant needs the coefficient a")
    if not 0 < lam < 1:
        raise InvalidParameter(f"lambda must lie in (0, 1), got {lam!r}")
    _check_n(n)
    h = 1.0 / n
    L = torus_matrix(quad, n)
    y = np.arange(n) / n
    a = evaluate_array(coeffs.a, y)
    g = evaluate_array(coeffs.g, y)
    policy = np.zeros(n, dtype=int)
    kappa = 0.0
    z = np.zeros(n)
    for _ in range(max_iters):
        B = _policy_matrix(L, a, h, lam, policy)
        assert_m_matrix(B, what="eikonal")
        step = _lu_solve(B, g - lam * kappa)
        kappa += float(np.mean(step))
        z = step - np.mean(step)
        cand = _upwind_candidates(z, h)
        best = np.argmax(cand, axis=0)
        current = cand[policy, np.arange(n)]
        improve = cand[best, np.arange(n)] > current + 1e-12 * (1.0 + np.abs(current))
        if not np.any(improve):
            break
        policy = np.where(improve, best, policy)
    else:
        raise NotConverged(f"policy iteration did not settle in {max_iters} steps")
    grad = np.max(_upwind_candidates(z, h), axis=0)
    residual = (lam * kappa - g) + lam * z + a * grad - L @ z
    res = float(np.abs(residual).max())
    if res > tol:
        raise NotConverged(f"eikonal residual {res:.3g} exceeds {tol:g}")
    return GridFunction(Torus(n), kappa + z)
