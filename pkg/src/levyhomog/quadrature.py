"""Monotone compensated quadrature for the 1D alpha-stable Levy operator.

The operator

    I[u](x) = int [u(x+z) - u(x) - 1_{|z|<=1} u'(x) z] |z|^(-1-alpha) dz

is split into three pieces on a grid of spacing ``h``:

* near field ``|z| <= zeta``: the integrand is replaced by ``u''(x) z^2 / 2``
  with ``u''`` from the central second difference;
* mid field ``zeta < |z| <= R``: symmetric node pairs ``+-z_k`` on the grid,
  so the gradient compensator cancels exactly;
* tail ``|z| > R``: the far field is a single constant and the kernel mass
  beyond ``R`` is added analytically.

Every off-center coefficient of the resulting stencil is nonnegative, so the
discrete operator satisfies a maximum principle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Union

import numpy as np
from scipy.linalg import toeplitz

from .errors import HaloTooShort, InvalidParameter, OrderingViolated

__all__ = [
    "LevyQuadrature",
    "Torus",
    "Domain",
    "GridFunction",
    "SplitParams",
    "SplitValues",
    "build_quadrature",
    "tail_mass",
    "near_moment",
    "apply_levy",
    "eval_split",
    "torus_matrix",
    "domain_matrix",
    "assert_m_matrix",
    "tampered_quadrature",
]


def _check_alpha(alpha: float):
    if not (0.0 < alpha < 2.0) or not math.isfinite(alpha):
        raise InvalidParameter(f"alpha must lie in (0, 2), got {alpha!r}")


def tail_mass(alpha: float, R: float) -> float:
    """Kernel mass ``int_{|z|>R} |z|^(-1-alpha) dz = 2 / (alpha R^alpha)``."""
    _check_alpha(alpha)
    if not R > 0:
        raise InvalidParameter(f"R must be positive, got {R!r}")
    return 2.0 / (alpha * R**alpha)


def near_moment(alpha: float, zeta: float) -> float:
    """Second moment ``int_{|z|<=zeta} z^2 |z|^(-1-alpha) dz = 2 zeta^(2-alpha) / (2-alpha)``."""
    _check_alpha(alpha)
    if not zeta > 0:
        raise InvalidParameter(f"zeta must be positive, got {zeta!r}")
    return 2.0 * zeta ** (2.0 - alpha) / (2.0 - alpha)


def _cell_moment(alpha: float, a, b):
    # int_a^b z^2 z^(-1-alpha) dz, one side only
    return (np.power(b, 2.0 - alpha) - np.power(a, 2.0 - alpha)) / (2.0 - alpha)


@dataclass(frozen=True, eq=False)
class LevyQuadrature:
    alpha: float
    h: float
    zeta: float
    R: float
    offsets: np.ndarray  # integer multiples k of h, one per node
    nodes: np.ndarray  # z_k = k h
    weights: np.ndarray  # per side of the symmetric pair
    cell_lo: np.ndarray
    cell_hi: np.ndarray
    near_moment: float
    tail_mass: float

    @property
    def reach(self) -> int:
        """Largest stencil offset in grid points."""
        return int(self.offsets[-1]) if len(self.offsets) else 1

    def stencil(self) -> np.ndarray:
        """Coefficients by offset: ``I_h u(x) = sum_k s[k] (u(x+kh) + u(x-kh))`` for k >= 1,
        plus ``s[0] u(x)`` plus ``tail_mass * far_field``."""
        s = np.zeros(self.reach + 1)
        s[1] += 0.5 * self.near_moment / self.h**2
        np.add.at(s, self.offsets, self.weights)
        s[0] = -(self.near_moment / self.h**2 + 2.0 * self.weights.sum() + self.tail_mass)
        return s


def build_quadrature(alpha: float, h: float, zeta: float | None = None, R: float = 1.0,
                     *, validate: bool = True) -> LevyQuadrature:
    """Build the quadrature for spacing ``h``, near-field radius ``zeta`` (default ``h``)
    and truncation radius ``R``.

    Nodes sit at the grid offsets ``k h`` inside ``(zeta, R]``; their cells tile
    ``(zeta, R]`` exactly (the first cell starts at ``zeta``, the last ends at
    ``R``). Each weight is the exact integral of ``z^2 q(z)`` over the cell divided
    by ``z_k^2``, which is positive and reproduces the quadratic part of the
    integrand without error.
    """
    _check_alpha(alpha)
    if zeta is None:
        zeta = h
    if not (h > 0 and math.isfinite(h)):
        raise InvalidParameter(f"h must be positive, got {h!r}")
    if not (0 < zeta <= h * (1 + 1e-12)):
        raise InvalidParameter(f"zeta must lie in (0, h], got {zeta!r} with h={h!r}")
    if not R >= 1.0:
        raise InvalidParameter(f"R must be >= 1, got {R!r}")
    K = round(R / h)
    if abs(K * h - R) > 1e-9 * R:
        raise InvalidParameter(f"R={R!r} is not an integer multiple of h={h!r}")
    zeta = min(zeta, h)
    k0 = int(math.floor(zeta / h * (1 + 1e-12))) + 1
    offsets = np.arange(k0, K + 1)
    nodes = offsets * h
    lo = (offsets - 0.5) * h
    hi = (offsets + 0.5) * h
    lo[0] = zeta
    hi[-1] = R
    weights = _cell_moment(alpha, lo, hi) / nodes**2
    q = LevyQuadrature(
        alpha=float(alpha), h=float(h), zeta=float(zeta), R=float(R),
        offsets=offsets, nodes=nodes, weights=weights, cell_lo=lo, cell_hi=hi,
        near_moment=near_moment(alpha, zeta), tail_mass=tail_mass(alpha, R),
    )
    if validate:
        _check_monotone(q)
    for arr in (offsets, nodes, weights, lo, hi):
        arr.setflags(write=False)
    return q


def _check_monotone(q: LevyQuadrature):
    if np.any(q.weights < 0) or q.near_moment < 0 or q.tail_mass < 0:
        raise OrderingViolated("quadrature has a negative weight; the scheme would not be monotone")


def tampered_quadrature(q: LevyQuadrature, factor: float = -50.0) -> LevyQuadrature:
    """Debug helper: copy of ``q`` with the first node weight scaled by ``factor``.

    A negative factor breaks monotonicity on purpose, to exercise failure paths.
    """
    w = q.weights.copy()
    w[0] *= factor
    return replace(q, weights=w)


# --------------------------------------------------------------------------
# grids


@dataclass(frozen=True)
class Torus:
    n: int

    @property
    def spacing(self) -> float:
        return 1.0 / self.n

    def points(self) -> np.ndarray:
        return np.arange(self.n) / self.n


@dataclass(frozen=True)
class Domain:
    """Interval ``(x_lo, x_hi)`` with ``halo`` exterior points on each side.

    The value array covers ``x_lo - halo*h .. x_hi + halo*h``. The endpoints
    ``x_lo`` and ``x_hi`` belong to the exterior (the domain is open), so the
    unknowns are the ``m - 1`` points strictly inside.
    """

    x_lo: float
    x_hi: float
    h: float
    halo: int
    far_field: float = 0.0

    @property
    def m(self) -> int:
        return round((self.x_hi - self.x_lo) / self.h)

    @property
    def size(self) -> int:
        return self.m + 1 + 2 * self.halo

    @property
    def interior(self) -> slice:
        return slice(self.halo + 1, self.halo + self.m)

    @property
    def closed(self) -> slice:
        return slice(self.halo, self.halo + self.m + 1)

    def points(self) -> np.ndarray:
        return self.x_lo + (np.arange(self.size) - self.halo) * self.h

    def exterior_mask(self) -> np.ndarray:
        mask = np.ones(self.size, dtype=bool)
        mask[self.interior] = False
        return mask


Grid = Union[Torus, Domain]


@dataclass(frozen=True, eq=False)
class GridFunction:
    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        expected = self.grid.n if isinstance(self.grid, Torus) else self.grid.size
        if len(self.values) != expected:
            raise InvalidParameter(f"expected {expected} values for {self.grid}, got {len(self.values)}")


def _check_grid(q: LevyQuadrature, grid: Grid):
    spacing = grid.spacing if isinstance(grid, Torus) else grid.h
    if abs(spacing - q.h) > 1e-12 * q.h:
        raise InvalidParameter(f"quadrature spacing {q.h!r} does not match grid spacing {spacing!r}")
    if isinstance(grid, Domain) and grid.halo < q.reach:
        raise HaloTooShort(f"halo of {grid.halo} points does not reach R={q.R} ({q.reach} points)")


def torus_matrix(q: LevyQuadrature, n: int) -> np.ndarray:
    """Dense circulant matrix of ``I_h`` on the torus with ``n`` points.

    Offsets beyond one period wrap around; the tail beyond ``R`` sees the torus
    average as its far-field constant.
    """
    _check_grid(q, Torus(n))
    s = q.stencil()
    row = np.zeros(n)
    row[0] += s[0]
    k = np.arange(1, len(s))
    np.add.at(row, k % n, s[1:])
    np.add.at(row, (-k) % n, s[1:])
    row += q.tail_mass / n
    idx = (np.arange(n)[None, :] - np.arange(n)[:, None]) % n
    return row[idx]


def domain_matrix(q: LevyQuadrature, grid: Domain) -> np.ndarray:
    """Block of ``I_h`` coupling the interior unknowns of ``grid`` to each other.

    The remaining part of ``I_h`` (halo values and the far-field tail) is data;
    it equals :func:`apply_levy` of the grid function with the interior zeroed.
    """
    _check_grid(q, grid)
    s = q.stencil()
    n_int = grid.m - 1
    col = np.zeros(n_int)
    upto = min(n_int, len(s))
    col[:upto] = s[:upto]
    return toeplitz(col)


def assert_m_matrix(A: np.ndarray, *, strict: bool = True, what: str = "system"):
    """Raise :class:`OrderingViolated` unless ``A`` has a positive diagonal, non-positive
    off-diagonals and (weak or strict) row diagonal dominance."""
    d = np.diag(A)
    off = A - np.diag(d)
    if np.any(d <= 0):
        raise OrderingViolated(f"{what} matrix has a non-positive diagonal entry")
    if np.any(off > 0):
        i, j = np.unravel_index(np.argmax(off), off.shape)
        raise OrderingViolated(f"{what} matrix has positive off-diagonal entry at ({i}, {j}): {off[i, j]:.3e}")
    slack = d - np.abs(off).sum(axis=1)
    tol = 1e-12 * d
    if strict and np.any(slack <= -tol):
        raise OrderingViolated(f"{what} matrix is not diagonally dominant")


def apply_levy(q: LevyQuadrature, u: GridFunction) -> GridFunction:
    """Evaluate ``I_h[u]``.

    On a torus every point is evaluated. On a domain the points of the closed
    interval ``[x_lo, x_hi]`` are evaluated and the halo entries are NaN.
    """
    grid = u.grid
    _check_grid(q, grid)
    vals = np.asarray(u.values, dtype=float)
    if isinstance(grid, Torus):
        return GridFunction(grid, torus_matrix(q, grid.n) @ vals)
    s = q.stencil()
    sl = grid.closed
    lo, hi = sl.start, sl.stop
    out = np.full(grid.size, np.nan)
    center = vals[lo:hi]
    # difference form: constants cancel exactly; ascending |z| fixes the summation order
    acc = q.tail_mass * (grid.far_field - center)
    for k in range(1, len(s)):
        if s[k] != 0.0:
            acc = acc + s[k] * ((vals[lo + k:hi + k] - center) + (vals[lo - k:hi - k] - center))
    out[lo:hi] = acc
    return GridFunction(grid, out)


# --------------------------------------------------------------------------
# near/far split evaluation


@dataclass(frozen=True)
class SplitParams:
    nu: float
    delta: float
    X: float
    p: float = 0.0

    def __post_init__(self):
        if not (0 < self.nu <= 1):
            raise InvalidParameter(f"nu must lie in (0, 1], got {self.nu!r}")
        if self.delta < 0:
            raise InvalidParameter(f"delta must be >= 0, got {self.delta!r}")


@dataclass(frozen=True)
class SplitValues:
    I1_plus: float
    I1_minus: float
    I2: float


def _shifted(u: GridFunction, point: int, offsets: np.ndarray):
    vals = np.asarray(u.values, dtype=float)
    if isinstance(u.grid, Torus):
        n = u.grid.n
        return vals[(point + offsets) % n], vals[(point - offsets) % n]
    if point - offsets.max(initial=0) < 0 or point + offsets.max(initial=0) >= len(vals):
        raise HaloTooShort(f"point {point} with reach {offsets.max(initial=0)} leaves the halo")
    return vals[point + offsets], vals[point - offsets]


def eval_split(q: LevyQuadrature, u: GridFunction, point: int, s: SplitParams) -> SplitValues:
    """Near/far split of the operator at one grid point.

    ``I1_plus``/``I1_minus`` integrate ``(X +- 2 delta) z^2 / 2`` over ``|z| <= nu``
    in closed form; ``I2`` applies the same node weights as :func:`apply_levy`
    to ``(nu, R]`` (cells straddling ``nu`` are cut there) and adds the tail.
    The drift term ``p z`` cancels between the two halves of every node pair.
    """
    _check_grid(q, u.grid)
    if s.nu < q.zeta * (1 - 1e-12):
        raise InvalidParameter(f"nu={s.nu!r} is below the near-field radius zeta={q.zeta!r}")
    moment = near_moment(q.alpha, s.nu)
    i1_plus = 0.5 * (s.X + 2 * s.delta) * moment
    i1_minus = 0.5 * (s.X - 2 * s.delta) * moment

    keep = q.cell_hi > s.nu
    lo = np.maximum(q.cell_lo[keep], s.nu)
    w = _cell_moment(q.alpha, lo, q.cell_hi[keep]) / q.nodes[keep] ** 2
    plus, minus = _shifted(u, point, q.offsets[keep])
    center = float(np.asarray(u.values, dtype=float)[point])
    # compensator: p*z at +z and -p*z at -z
    drift = s.p * q.nodes[keep] - s.p * q.nodes[keep]
    i2 = 0.0
    for wk, a, b, dk in zip(w, plus, minus, drift):
        i2 += wk * ((a - center) + (b - center) - dk)
    if isinstance(u.grid, Torus):
        far = float(np.mean(u.values))
    else:
        far = u.grid.far_field
    i2 += q.tail_mass * (far - center)
    return SplitValues(i1_plus, i1_minus, i2)
