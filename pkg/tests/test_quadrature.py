import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from levyhomog.diagnostics import cos_mode_split, discrete_symbol, exact_symbol
from levyhomog.errors import HaloTooShort, InvalidParameter, OrderingViolated
from levyhomog.quadrature import (
    Domain, GridFunction, SplitParams, Torus, apply_levy, assert_m_matrix, build_quadrature, domain_matrix,
    eval_split, near_moment, tail_mass, tampered_quadrature, torus_matrix,
)

from oracles import levy_symbol

alphas = st.floats(min_value=0.1, max_value=1.9)


@pytest.mark.parametrize("alpha, R, expected", [(1.0, 2.0, 1.0), (0.5, 1.0, 4.0), (1.0, 4.0, 0.5)])
def test_tail_mass(alpha, R, expected):
    assert tail_mass(alpha, R) == pytest.approx(expected, rel=1e-15)


@pytest.mark.parametrize("alpha, zeta, expected", [(1.0, 0.5, 1.0), (0.5, 1.0, 4 / 3), (1.5, 1.0, 4.0)])
def test_near_moment(alpha, zeta, expected):
    assert near_moment(alpha, zeta) == pytest.approx(expected, rel=1e-15)


@pytest.mark.parametrize("bad", [0.0, 2.0, -1.0, math.nan])
def test_alpha_range(bad):
    with pytest.raises(InvalidParameter):
        build_quadrature(bad, 0.01)


@given(alphas, st.sampled_from([1 / 16, 1 / 64, 1 / 100]), st.sampled_from([1.0, 2.0, 8.0]))
def test_weights_positive_and_cells_tile(alpha, h, R):
    q = build_quadrature(alpha, h, None, R)
    assert np.all(q.weights > 0) and q.near_moment > 0 and q.tail_mass > 0
    assert q.cell_lo[0] == pytest.approx(q.zeta)
    assert q.cell_hi[-1] == pytest.approx(R)
    np.testing.assert_allclose(q.cell_lo[1:], q.cell_hi[:-1])
    assert np.all((q.nodes >= q.cell_lo - 1e-12) & (q.nodes <= q.cell_hi + 1e-12))


@given(alphas)
def test_second_moment_is_exact(alpha):
    # u = x^2 (far field dropped): I_h[u] = int_{|z| <= R} z^2 q(z) dz
    h, R = 1 / 32, 2.0
    q = build_quadrature(alpha, h, None, R)
    grid = Domain(0.0, 1.0, h, q.reach, 0.0)
    x = grid.points()
    Iu = apply_levy(q, GridFunction(grid, x**2)).values[grid.closed] + q.tail_mass * x[grid.closed] ** 2
    np.testing.assert_allclose(Iu, near_moment(alpha, R), rtol=1e-11)


def test_constants_and_odd_functions():
    h = 1 / 32
    q = build_quadrature(1.0, h, None, 1.0)
    grid = Domain(0.0, 1.0, h, q.reach, 7.0)
    Iu = apply_levy(q, GridFunction(grid, np.full(grid.size, 7.0))).values
    assert np.all(Iu[grid.closed] == 0.0)
    assert np.all(np.isnan(Iu[: grid.halo]))
    lin = 3 * grid.points()
    Il = apply_levy(q, GridFunction(grid, lin)).values[grid.closed] + q.tail_mass * (lin[grid.closed] - 7.0)
    assert np.abs(Il).max() <= 1e-9


def test_halo_too_short():
    q = build_quadrature(1.0, 1 / 32, None, 1.0)
    with pytest.raises(HaloTooShort):
        apply_levy(q, GridFunction(Domain(0, 1, 1 / 32, q.reach - 1, 0.0), np.zeros(33 + 2 * (q.reach - 1))))


@given(alphas, st.sampled_from([16, 64, 200]))
@settings(max_examples=30)
def test_torus_matrix_is_monotone_and_conservative(alpha, n):
    A = torus_matrix(build_quadrature(alpha, 1 / n, None, 8.0), n)
    np.testing.assert_allclose(A, A.T, atol=1e-12 * np.abs(A).max())
    assert np.abs(A.sum(axis=1)).max() <= 1e-10 * np.abs(A).max()
    off = A - np.diag(np.diag(A))
    assert off.min() >= 0


def test_dirichlet_block_is_m_matrix():
    q = build_quadrature(1.3, 1 / 64, None, 1.0)
    A = domain_matrix(q, Domain(0, 1, 1 / 64, q.reach, 0.0))
    assert_m_matrix(np.eye(len(A)) - 2.0 * A)


def test_tampered_quadrature_is_caught():
    q = tampered_quadrature(build_quadrature(1.0, 1 / 64, None, 1.0))
    A = domain_matrix(q, Domain(0, 1, 1 / 64, q.reach, 0.0))
    with pytest.raises(OrderingViolated):
        assert_m_matrix(np.eye(len(A)) - 2.0 * A)


@pytest.mark.parametrize("alpha", [0.5, 1.0, 1.5])
@pytest.mark.parametrize("k", [1, 2, 4])
def test_symbol_matches_brute_force(alpha, k):
    sigma = levy_symbol(alpha, k)
    assert exact_symbol(alpha, k) == pytest.approx(sigma, rel=1e-10)
    errs = [abs(discrete_symbol(alpha, n, k) / sigma - 1) for n in (256, 512)]
    assert errs[1] <= 1e-2 and errs[1] < errs[0]


def test_cos_mode_is_eigenvector():
    n, k = 128, 3
    u = np.cos(2 * np.pi * k * np.arange(n) / n)
    Iu = apply_levy(build_quadrature(0.8, 1 / n, None, 16.0), GridFunction(Torus(n), u)).values
    lam = -(Iu @ u) / (u @ u)
    np.testing.assert_allclose(Iu, -lam * u, atol=1e-9 * lam)


# --- near/far split -------------------------------------------------------


def test_split_closed_form_example():
    q = build_quadrature(1.0, 1 / 16, None, 1.0)
    sv = eval_split(q, GridFunction(Torus(16), np.zeros(16)), 0, SplitParams(nu=0.5, delta=0.0, X=2.0))
    assert sv.I1_plus == pytest.approx(1.0) and sv.I1_minus == pytest.approx(1.0)


@given(alphas, st.floats(min_value=0.05, max_value=1.0), st.floats(min_value=0, max_value=10),
       st.floats(min_value=-50, max_value=50))
def test_split_width_identity(alpha, nu, delta, X):
    q = build_quadrature(alpha, 1 / 32, None, 2.0)
    u = GridFunction(Torus(32), np.sin(2 * np.pi * np.arange(32) / 32))
    sv = eval_split(q, u, 3, SplitParams(nu=nu, delta=delta, X=X))
    M = near_moment(alpha, nu)
    # both terms are of size |X| M, so rounding is measured against that
    assert abs((sv.I1_plus - sv.I1_minus) - 2 * delta * M) <= 1e-14 * (abs(X) + 2 * delta) * M


def test_split_rejects_bad_parameters():
    with pytest.raises(InvalidParameter):
        SplitParams(nu=0.0, delta=0.0, X=0.0)
    with pytest.raises(InvalidParameter):
        SplitParams(nu=0.5, delta=-1.0, X=0.0)
    q = build_quadrature(1.0, 1 / 16, None, 1.0)
    with pytest.raises(InvalidParameter):
        eval_split(q, GridFunction(Torus(16), np.zeros(16)), 0, SplitParams(nu=0.01, delta=0.0, X=0.0))


def test_split_is_a_partition_at_delta_zero():
    # at nu = zeta the far part of the split is the far part of I_h
    q = build_quadrature(1.0, 1 / 64, None, 4.0)
    u = GridFunction(Torus(64), np.cos(2 * np.pi * np.arange(64) / 64))
    sv = eval_split(q, u, 0, SplitParams(nu=q.zeta, delta=0.0, X=-(2 * np.pi) ** 2))
    Ih = apply_levy(q, u).values[0]
    # the only difference is the near part: exact integral of X z^2/2 vs the second difference
    D2 = (u.values[1] + u.values[-1] - 2 * u.values[0]) / q.h**2
    assert Ih - sv.I2 == pytest.approx(0.5 * D2 * q.near_moment, rel=1e-12)
    assert sv.I1_plus == pytest.approx(0.5 * -(2 * np.pi) ** 2 * q.near_moment)


@settings(max_examples=40, deadline=None)
@given(st.floats(min_value=0.2, max_value=1.8), st.sampled_from([1, 2, 4]), st.integers(0, 127),
       st.integers(1, 20))
def test_split_sandwich_holds(alpha, k, point, nu_cells):
    check = cos_mode_split(alpha, 128, k, point, nu_cells, R=8.0)
    assert check.passed, (check.lower_slack, check.upper_slack)
