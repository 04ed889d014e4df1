"""Consistency checks for the discrete operator on cosine modes.

For ``u(y) = cos(2 pi k y)`` on the unit torus, ``I[u] = -sigma_k u`` with
``sigma_k = 2 Gamma(1-alpha)/alpha cos(pi alpha/2) |2 pi k|^alpha`` (``pi |2 pi k|``
at ``alpha = 1``). :func:`discrete_symbol` measures the discrete counterpart and
:func:`cos_mode_split` checks the near/far sandwich at one grid point.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .quadrature import (
    GridFunction, SplitParams, Torus, apply_levy, build_quadrature, eval_split, near_moment,
)

__all__ = ["exact_symbol", "discrete_symbol", "SplitCheck", "cos_mode_split", "split_battery"]


def exact_symbol(alpha: float, k: int) -> float:
    """Fourier symbol of the full-space operator at frequency ``2 pi k``."""
    xi = 2 * math.pi * abs(k)
    if abs(alpha - 1.0) < 1e-14:
        return math.pi * xi
    return 2 * math.gamma(1 - alpha) / alpha * math.cos(math.pi * alpha / 2) * xi**alpha


def discrete_symbol(alpha: float, n: int, k: int, R: float = 128.0) -> float:
    """``-<I_h[u], u> / <u, u>`` for ``u = cos(2 pi k y)`` on an ``n``-point torus.

    The discrete operator is circulant and even, so cosines are eigenvectors and
    the Rayleigh quotient is the eigenvalue.
    """
    q = build_quadrature(alpha, 1.0 / n, None, R)
    y = np.arange(n) / n
    u = np.cos(2 * np.pi * k * y)
    Iu = apply_levy(q, GridFunction(Torus(n), u)).values
    return -float(Iu @ u) / float(u @ u)


@dataclass(frozen=True)
class SplitCheck:
    point: int
    nu: float
    delta: float
    X: float
    I_h: float
    I1_plus: float
    I1_minus: float
    I2: float
    identity_error: float
    tol: float

    @property
    def lower_slack(self) -> float:
        return self.I_h - (self.I1_minus + self.I2)

    @property
    def upper_slack(self) -> float:
        return (self.I1_plus + self.I2) - self.I_h

    @property
    def passed(self) -> bool:
        return self.lower_slack >= -self.tol and self.upper_slack >= -self.tol and self.identity_error <= self.tol


def _cos_oscillation(omega: float, x: float, radius: float) -> float:
    """``max_{|z| <= radius} |cos(omega (x+z)) - cos(omega x)|``, exactly.

    The extremes sit at the endpoints or where ``omega (x+z)`` is a multiple of ``pi``.
    """
    base = math.cos(omega * x)
    cands = [x - radius, x + radius]
    m_lo = math.ceil(omega * (x - radius) / math.pi)
    m_hi = math.floor(omega * (x + radius) / math.pi)
    cands += [m * math.pi / omega for m in range(m_lo, m_hi + 1)]
    return max(abs(math.cos(omega * t) - base) for t in cands)


def cos_mode_split(alpha: float, n: int, k: int, point: int, nu_cells: int, *, R: float = 128.0,
                   tol: float = 1e-8) -> SplitCheck:
    """Split check for ``u = cos(2 pi k y)`` at torus point ``point`` with ``nu = nu_cells h``.

    ``X = u''(x)`` and ``delta`` is the smallest slack with
    ``X - 2 delta <= u'' <= X + 2 delta`` on ``|z| <= nu + h``; the extra ``h``
    covers the node of the cell cut at ``nu``.
    """
    h = 1.0 / n
    q = build_quadrature(alpha, h, None, R)
    nu = nu_cells * h
    omega = 2 * math.pi * k
    x = point * h
    X = -omega**2 * math.cos(omega * x)
    delta = 0.5 * omega**2 * _cos_oscillation(omega, x, nu + h)
    u = GridFunction(Torus(n), np.cos(omega * np.arange(n) * h))
    I_h = float(apply_levy(q, u).values[point])
    sv = eval_split(q, u, point, SplitParams(nu=nu, delta=delta, X=X))
    ident = abs((sv.I1_plus - sv.I1_minus) - 2 * delta * near_moment(alpha, nu))
    return SplitCheck(point, nu, delta, X, I_h, sv.I1_plus, sv.I1_minus, sv.I2, ident, tol)


def split_battery(alpha: float, n: int = 256, modes=(1, 2, 4), points=(0, 17, 64, 101),
                  nu_cells=(1, 4, 16), R: float = 128.0, tol: float = 1e-8) -> list[SplitCheck]:
    return [
        cos_mode_split(alpha, n, k, p % n, m, R=R, tol=tol)
        for k in modes for p in points for m in nu_cells
    ]
