"""Effective nonlocal operator ``Ibar(x, I) = -d(x, I)``.

For the linear cell problem ``d`` is affine in ``I``, so the operator is stored
in the normal form ``Ibar(I) = -(g_bar + c_bar I)`` and any non-affine fit is
treated as a solver failure.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .cell import CoefficientSet, DiscountSchedule, estimate_d, solve_cell_direct
from .errors import CertificateFailed, InvalidParameter, NotAffine
from .exprs import evaluate_array
from .quadrature import LevyQuadrature

__all__ = [
    "ThetaCertificate",
    "EffectiveOperator",
    "build_effective",
    "eval_effective",
    "harmonic_mean_oracle",
    "check_subellipticity",
]


@dataclass(frozen=True)
class ThetaCertificate:
    theta: float
    slope_check: bool
    margin: float


@dataclass(frozen=True)
class EffectiveOperator:
    g_bar: float
    c_bar: float
    fit_residual: float = 0.0
    samples: tuple[tuple[float, float], ...] = ()
    theta_certificate: ThetaCertificate | None = None
    meta: dict = field(default_factory=dict, compare=False)

    def report(self) -> dict:
        """Flat key-value form used by the CLI and the JSON emitter."""
        cert = self.theta_certificate
        return {
            "g_bar": self.g_bar,
            "c_bar": self.c_bar,
            "fit_residual": self.fit_residual,
            "theta": cert.theta if cert else float("nan"),
            "margin": cert.margin if cert else float("nan"),
            "slope_check": "pass" if cert and cert.slope_check else "fail",
        }


def harmonic_mean_oracle(coeffs: CoefficientSet, m: int = 100_000) -> tuple[float, float]:
    """``(c_bar, g_bar)`` from the solvability condition of the cell problem.

    Dividing the cell equation by ``c`` and averaging over the torus kills the
    symmetric nonlocal term, leaving ``c_bar = 1/mean(1/c)`` and
    ``g_bar = c_bar * mean(g/c)``. The means use the ``m``-point periodic
    midpoint rule, which converges spectrally for smooth periodic data.
    """
    if m < 256:
        raise InvalidParameter(f"oracle resolution m must be >= 256, got {m}")
    y = (np.arange(m) + 0.5) / m
    c = evaluate_array(coeffs.c, y)
    g = evaluate_array(coeffs.g, y)
    c_bar = 1.0 / float(np.mean(1.0 / c))
    g_bar = c_bar * float(np.mean(g / c))
    return c_bar, g_bar


def build_effective(coeffs: CoefficientSet, quad: LevyQuadrature, I_samples=(-2.0, -1.0, 0.0, 1.0, 2.0),
                    n: int = 512, *, method: str = "direct", schedule: DiscountSchedule | None = None,
                    affine_tol: float = 1e-6, slope_tol: float = 1e-3) -> EffectiveOperator:
    """Sample ``d(I)`` with the cell solver, fit ``d = g_bar + c_bar I`` and certify it.

    ``affine_tol`` is relative to ``max |d|`` over the samples. The certificate
    uses ``theta = c0`` and records ``c_bar - c0`` as the margin.
    """
    I_samples = [float(v) for v in I_samples]
    if len(set(I_samples)) < 3:
        raise InvalidParameter("need at least 3 distinct I samples")
    if method == "direct":
        ds = [solve_cell_direct(coeffs, quad, I, n).d for I in I_samples]
    elif method == "discounted":
        ds = [estimate_d(coeffs, quad, schedule, I, n).d for I in I_samples]
    else:
        raise InvalidParameter(f"unknown cell method {method!r}")
    Is = np.array(I_samples)
    ds_arr = np.array(ds)
    A = np.column_stack([np.ones_like(Is), Is])
    (g_bar, c_bar), *_ = np.linalg.lstsq(A, ds_arr, rcond=None)
    fit_residual = float(np.abs(A @ np.array([g_bar, c_bar]) - ds_arr).max())
    scale = max(1.0, float(np.abs(ds_arr).max()))
    if fit_residual > affine_tol * scale:
        raise NotAffine(f"d(I) deviates from its affine fit by {fit_residual:.3g} (tolerance {affine_tol * scale:.3g})")
    margin = float(c_bar) - coeffs.c0
    cert = ThetaCertificate(theta=coeffs.c0, slope_check=margin >= -slope_tol, margin=margin)
    return EffectiveOperator(
        g_bar=float(g_bar), c_bar=float(c_bar), fit_residual=fit_residual,
        samples=tuple(zip(I_samples, ds)), theta_certificate=cert,
        meta={"method": method, "n": n},
    )


def eval_effective(op: EffectiveOperator, x: float, I: float) -> float:
    """``Ibar(x, I) = -(g_bar + c_bar I)``; the value does not depend on ``x``."""
    return -(op.g_bar + op.c_bar * I)


def check_subellipticity(op: EffectiveOperator, c0: float, I_pairs, tol: float = 1e-12) -> ThetaCertificate:
    """Verify ``Ibar(I + I') <= Ibar(I) - c0 I'`` for each ``(I, I')`` with ``I' > 0``.

    The returned margin is the smallest ``Ibar(I) - c0 I' - Ibar(I + I')``.
    """
    pairs = list(I_pairs)
    if not pairs:
        raise InvalidParameter("no (I, I') pairs given")
    worst = np.inf
    for I, Ip in pairs:
        if not Ip > 0:
            raise InvalidParameter(f"I' must be positive, got {Ip!r}")
        gap = eval_effective(op, 0.0, I) - c0 * Ip - eval_effective(op, 0.0, I + Ip)
        if gap < -tol:
            raise CertificateFailed(
                f"subellipticity with theta={c0:g} fails at I={I!r}, I'={Ip!r} (margin {gap:.3g})", pair=(I, Ip)
            )
        worst = min(worst, gap)
    return ThetaCertificate(theta=c0, slope_check=True, margin=float(worst))


def with_coefficients(op: EffectiveOperator, g_bar: float, c_bar: float) -> EffectiveOperator:
    """Copy of ``op`` with replaced coefficients; used to build tampered operators in tests."""
    return replace(op, g_bar=g_bar, c_bar=c_bar)
