"""Seeded random trigonometric coefficient sets for property trials."""

from __future__ import annotations

import numpy as np

from .cell import CoefficientSet

__all__ = ["trig_polynomial", "random_coefficients", "battery"]


def trig_polynomial(mean: float, cos_coefs, sin_coefs) -> str:
    """Source text of ``mean + sum_j a_j cos(2 pi j y) + b_j sin(2 pi j y)``."""
    parts = [repr(float(mean))]
    for j, (a, b) in enumerate(zip(cos_coefs, sin_coefs), start=1):
        if a:
            parts.append(f"({float(a)!r})*cos({2 * j}*pi*y)")
        if b:
            parts.append(f"({float(b)!r})*sin({2 * j}*pi*y)")
    return "+".join(parts)


def _trig(rng: np.random.Generator, modes: int, amplitude: float) -> tuple[np.ndarray, np.ndarray]:
    return rng.uniform(-amplitude, amplitude, modes), rng.uniform(-amplitude, amplitude, modes)


def random_coefficients(seed: int, *, alpha: float | None = None, modes: int = 3,
                        phi: str = "0", far_field: float = 0.0, with_a: bool = False) -> CoefficientSet:
    """Random smooth periodic ``c >= 0.5`` and ``g`` with at most ``modes`` harmonics.

    The oscillating part of ``c`` has total amplitude at most ``c_mean - 0.5``,
    so positivity holds by construction rather than by rejection.
    """
    rng = np.random.default_rng(seed)
    if alpha is None:
        alpha = float(rng.uniform(0.3, 1.7))
    c_mean = float(rng.uniform(1.0, 3.0))
    ca, cb = _trig(rng, modes, 1.0)
    scale = (c_mean - 0.5) / max(np.abs(ca).sum() + np.abs(cb).sum(), 1e-12) * rng.uniform(0.2, 1.0)
    ga, gb = _trig(rng, modes, 1.0)
    g_mean = float(rng.uniform(-1.0, 1.0))
    c = trig_polynomial(c_mean, ca * scale, cb * scale)
    g = trig_polynomial(g_mean, ga, gb)
    a = None
    if with_a:
        aa, ab = _trig(rng, modes, 0.2)
        a = trig_polynomial(1.0, aa, ab)
    return CoefficientSet.from_strings(alpha, c, g, a, phi, far_field)


def battery(count: int = 10, seed: int = 0, **kw) -> list[CoefficientSet]:
    return [random_coefficients(seed + i, **kw) for i in range(count)]
