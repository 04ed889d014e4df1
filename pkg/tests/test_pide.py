import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from levyhomog.cell import CoefficientSet
from levyhomog.effective import EffectiveOperator
from levyhomog.errors import InvalidParameter, OrderingViolated
from levyhomog.exprs import to_source
from levyhomog.instances import random_coefficients
from levyhomog.pide import comparison_trial, make_problem, solve, solve_effective, solve_eps_problem
from levyhomog.quadrature import build_quadrature, tampered_quadrature

REF = CoefficientSet.from_strings(1.0, "2+cos(2*pi*y)", "sin(2*pi*y)")


def coeffs(c="2+cos(2*pi*y)", g="sin(2*pi*y)", phi="0", far=0.0, alpha=1.0):
    return CoefficientSet.from_strings(alpha, c, g, None, phi, far)


def test_constant_solution():
    p = make_problem(coeffs("3", "2", "2", 2.0), 1 / 4, 16)
    rep = solve_eps_problem(p)
    assert np.abs(rep.u.values - 2).max() <= 1e-12
    assert rep.sup_residual <= 1e-10


def test_effective_constant_solution():
    op = EffectiveOperator(2.0, 5.0)
    rep = solve_effective(make_problem(coeffs(phi="2", far=2.0), 1 / 4, 16, effective=op))
    assert np.abs(rep.u.values - 2).max() <= 1e-12


def test_mode_guards():
    p = make_problem(REF, 1 / 4, 16)
    with pytest.raises(InvalidParameter):
        solve_effective(p)
    with pytest.raises(InvalidParameter):
        solve_eps_problem(make_problem(REF, 1 / 4, 16, effective=EffectiveOperator(0, 1)))


def test_constant_coefficients_homogenize_exactly():
    co = coeffs("1.5", "0.25", "x*(1-x)", 0.0)
    u = solve(make_problem(co, 1 / 8, 16)).u.values
    ub = solve(make_problem(co, 1 / 8, 16, effective=EffectiveOperator(0.25, 1.5))).u.values
    assert np.abs(u - ub).max() <= 1e-9


def test_exterior_values_are_data():
    co = coeffs(phi="1+x", far=0.0)
    p = make_problem(co, 1 / 4, 16)
    u = solve(p).u.values
    mask = p.grid.exterior_mask()
    np.testing.assert_array_equal(u[mask], 1 + p.grid.points()[mask])


def test_invalid_ratios():
    with pytest.raises(InvalidParameter):
        make_problem(REF, 1 / 3.5, 16)
    q = build_quadrature(1.0, 1 / 64, None, 1.0)
    with pytest.raises(InvalidParameter):
        make_problem(REF, 1 / 8, 16, quad=q)


def test_translation_invariance():
    p1 = make_problem(coeffs(phi="x", far=0.0), 1 / 8, 16)
    p2 = make_problem(coeffs(g="sin(2*pi*y)+1", phi="x+1", far=1.0), 1 / 8, 16)
    assert comparison_trial(p1, p2)
    d = solve(p2).u.values - solve(p1).u.values
    assert np.abs(d - 1).max() <= 1e-12


def test_right_halo_step_raises_solution_near_right_edge():
    # step(x - 1/2): 0 on the left halo, 1 on the right halo; x = 1/2 is never exterior
    step = "(abs(x-0.5)+(x-0.5))/(2*abs(x-0.5))"
    p1 = make_problem(coeffs(phi="0"), 1 / 8, 16)
    p2 = make_problem(coeffs(phi=step), 1 / 8, 16)
    assert comparison_trial(p1, p2)
    inner = p1.grid.interior
    lift = (solve(p2).u.values - solve(p1).u.values)[inner]
    assert np.all(lift > 0)
    assert lift[-1] > lift[len(lift) // 2] > lift[0]


def test_unordered_data_rejected():
    p1 = make_problem(coeffs(g="1"), 1 / 4, 16)
    p2 = make_problem(coeffs(g="0"), 1 / 4, 16)
    with pytest.raises(InvalidParameter):
        comparison_trial(p1, p2)


def test_tampered_scheme_is_caught():
    q = tampered_quadrature(build_quadrature(1.0, 1 / 128, None, 1.0))
    with pytest.raises(OrderingViolated):
        solve(make_problem(REF, 1 / 8, 16, quad=q))


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 100_000), st.floats(min_value=0.0, max_value=2.0))
def test_random_comparison(seed, bump):
    base = random_coefficients(seed)
    rng = np.random.default_rng(seed)
    lift = float(rng.uniform(0, 1))
    g2 = f"{to_source(base.g)}+{bump!r}*(1+cos(2*pi*y))"
    p1 = make_problem(coeffs(to_source(base.c), to_source(base.g), "0", 0.0, base.alpha), 1 / 4, 8)
    p2 = make_problem(coeffs(to_source(base.c), g2, f"{lift!r}*x*x", lift, base.alpha), 1 / 4, 8)
    assert comparison_trial(p1, p2)


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 100_000))
def test_maximum_principle(seed):
    co = random_coefficients(seed, phi="0.5*sin(3*x)", far_field=0.0)
    p = make_problem(co, 1 / 4, 8)
    u = solve(p).u.values
    _, g = p.coefficients()
    ext = p.exterior_values()[p.grid.exterior_mask()]
    assert np.abs(u).max() <= max(np.abs(g).max(), np.abs(ext).max(), abs(co.far_field)) + 1e-12


def test_report_serialization(tmp_path):
    rep = solve(make_problem(REF, 1 / 4, 16))
    rep.to_csv(tmp_path / "u.csv")
    lines = (tmp_path / "u.csv").read_text().splitlines()
    assert lines[0] == "x,u" and len(lines) == 1 + 65
    rep.to_json(tmp_path / "u.json")
    assert "sup_residual" in (tmp_path / "u.json").read_text()
