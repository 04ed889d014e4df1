import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from levyhomog.errors import DomainError
from levyhomog.exprs import (
    BinOp, Call, Const, Neg, Num, ParseError, ParseErrorKind, Var, evaluate, evaluate_array, parse, to_source,
    validate_periodic,
)


@pytest.mark.parametrize("text, at, expected", [
    ("2+cos(2*pi*y)", 0.0, 3.0),
    ("pi", 0.7, math.pi),
    ("abs(-2)*3", 0.0, 6.0),
    ("1-2-3", 0.0, -4.0),
    ("8/4/2", 0.0, 1.0),
    ("2*3+4*5", 0.0, 26.0),
    ("-y*2", 1.5, -3.0),
    ("--y", 2.0, 2.0),
    ("exp(0)+1e-1", 0.0, 1.1),
])
def test_evaluate_known_values(text, at, expected):
    assert evaluate(parse(text), at) == pytest.approx(expected, abs=1e-15)


def test_sin_quarter_period():
    assert evaluate(parse("sin(2*pi*y)"), 0.25) == pytest.approx(1.0, abs=1e-15)


@pytest.mark.parametrize("text, kind", [
    ("2*(3+", ParseErrorKind.UnbalancedParen),
    ("(1", ParseErrorKind.UnbalancedParen),
    ("1)", ParseErrorKind.UnbalancedParen),
    ("cos(y", ParseErrorKind.UnbalancedParen),
    ("foo(y)", ParseErrorKind.UnknownIdentifier),
    ("x", ParseErrorKind.UnknownIdentifier),
    ("", ParseErrorKind.EmptyInput),
    ("   ", ParseErrorKind.EmptyInput),
    ("1 2", ParseErrorKind.UnexpectedToken),
    ("*3", ParseErrorKind.UnexpectedToken),
    ("2^3", ParseErrorKind.UnexpectedToken),
])
def test_parse_errors(text, kind):
    with pytest.raises(ParseError) as info:
        parse(text)
    assert info.value.kind is kind


def test_variable_is_configurable():
    assert evaluate(parse("x+1", variable="x"), 2.0) == 3.0
    with pytest.raises(ParseError):
        parse("y", variable="x")


def test_division_by_zero():
    with pytest.raises(DomainError):
        evaluate(parse("1/y"), 0.0)
    with pytest.raises(DomainError):
        evaluate_array(parse("1/y"), [1.0, 0.0])


def test_exp_overflow_is_inf():
    assert evaluate(parse("exp(1000)"), 0.0) == math.inf


def test_deep_nesting_is_rejected_not_crashing():
    with pytest.raises(ParseError):
        parse("(" * 5000 + "1" + ")" * 5000)
    with pytest.raises(ParseError):
        parse("-" * 5000 + "1")


def test_periodicity():
    assert validate_periodic(parse("cos(2*pi*y)"), 64, 1e-9).passed
    rep = validate_periodic(parse("y"), 64, 1e-9)
    assert not rep.passed and rep.max_deviation == pytest.approx(1.0)
    assert validate_periodic(parse("2+0*y"), 4, 0.0).passed
    assert not validate_periodic(parse("1/sin(pi*y)"), 64, 1e-9).passed


# --- property tests -------------------------------------------------------

leaves = st.one_of(
    st.floats(min_value=0.0, max_value=1e6, allow_nan=False).map(Num),
    st.just(Const()),
    st.just(Var("y")),
)


def _extend(children):
    return st.one_of(
        children.map(Neg),
        st.tuples(st.sampled_from("+-*"), children, children).map(lambda t: BinOp(*t)),
        st.tuples(st.sampled_from(["sin", "cos", "abs"]), children).map(lambda t: Call(*t)),
    )


trees = st.recursive(leaves, _extend, max_leaves=25)


@given(trees)
def test_source_round_trip(e):
    assert parse(to_source(e)) == e


@given(trees, st.floats(min_value=-3, max_value=3))
def test_scalar_and_vector_evaluation_agree(e, y):
    a = evaluate(e, y)
    b = float(evaluate_array(e, np.array([y]))[0])
    assert (math.isnan(a) and math.isnan(b)) or a == b


@settings(max_examples=300)
@given(st.text(alphabet="0123456789.+-*/() ypiscoexab", max_size=40))
def test_fuzz_parse_only_raises_parse_error(text):
    try:
        e = parse(text)
    except ParseError as err:
        assert 0 <= err.position <= len(text)
        return
    try:
        evaluate(e, 0.3)
    except DomainError:
        pass


@given(st.binary(max_size=40))
def test_fuzz_bytes(data):
    try:
        parse(data)
    except ParseError:
        pass
