"""Reference values computed without the package.

Everything here uses scipy quadrature directly on the continuous formulas, so
agreement with the package is evidence rather than a tautology.
"""

from __future__ import annotations

import math

import numpy as np
from scipy import integrate


def levy_symbol(alpha: float, k: int) -> float:
    """``sigma`` with ``I[cos(w .)] = -sigma cos(w .)``, ``w = 2 pi k``, by brute force.

    ``sigma = 2 int_0^inf (1 - cos(w z)) z^(-1-alpha) dz``. On ``[0, 1]`` the
    integrand is smooth after a small-z series; on ``[1, inf)`` the oscillatory
    part goes through QUADPACK's Fourier-integral routine (QAWF).
    """
    w = 2 * math.pi * k

    def near(z):
        if w * z < 1e-3:
            t = (w * z) ** 2
            return (t / 2 - t * t / 24) * z ** (-1 - alpha)
        return (1 - math.cos(w * z)) * z ** (-1 - alpha)

    breaks = [j / (4 * k) for j in range(1, 4 * k)]
    a, _ = integrate.quad(near, 0.0, 1.0, points=breaks, limit=400, epsabs=1e-13, epsrel=1e-12)
    flat = 1.0 / alpha  # int_1^inf z^(-1-alpha) dz
    osc, _ = integrate.quad(lambda z: (1.0 + z) ** (-1 - alpha), 0.0, np.inf, weight="cos", wvar=w,
                            epsabs=1e-13, limlst=200)
    # shift z -> 1 + z: cos(w (1 + z)) = cos(w) cos(w z) - sin(w) sin(w z), and sin(w) = 0
    return 2 * (a + flat - math.cos(w) * osc)


def torus_mean(f) -> float:
    val, _ = integrate.quad(f, 0.0, 1.0, limit=200, epsabs=1e-13, epsrel=1e-13)
    return val


def harmonic_effective(c, g) -> tuple[float, float]:
    """``(c_bar, g_bar)`` for callables ``c, g`` on the unit torus."""
    c_bar = 1.0 / torus_mean(lambda y: 1.0 / c(y))
    g_bar = c_bar * torus_mean(lambda y: g(y) / c(y))
    return c_bar, g_bar
