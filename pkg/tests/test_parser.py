import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from feketelab.errors import InvalidInput
from feketelab.parser import BinOp, Neg, Num, ParseError, Pow, Var, parse, parse_map, pretty
from feketelab.qi import QI


def coeffs(F):
    return np.round(F.P, 12).tolist(), np.round(F.Q, 12).tolist()


def test_spec_examples():
    assert coeffs(parse_map("z^2")) == ([1, 0, 0], [0, 0, 1])
    assert coeffs(parse_map("(z^2+1)/(2*z)")) == ([1, 0, 1], [0, 2, 0])
    assert coeffs(parse_map("z^2 + i")) == ([1, 0, 1j], [0, 0, 1])


def test_common_factor_cancelled():
    assert coeffs(parse_map("(z^3+z)/(2*z^2)")) == ([1, 0, 1], [0, 2, 0])


def test_precedence():
    assert parse("-z^2") == Neg(Pow(Var(), Num(QI(2))))
    assert parse("2^3^2") == Pow(Num(QI(2)), Pow(Num(QI(3)), Num(QI(2))))
    assert parse("1-z*2") == BinOp("-", Num(QI(1)), BinOp("*", Var(), Num(QI(2))))
    assert parse("z^-2") == Pow(Var(), Neg(Num(QI(2))))


def test_negative_powers():
    F = parse_map("z^-2")
    assert coeffs(F) == ([0, 0, 1], [1, 0, 0])


@pytest.mark.parametrize("text", ["z^", "z+*2", "2z", "(z", "z)", "", "   ", "z^0.5", "z^z", "q"])
def test_syntax_and_exponent_errors(text):
    with pytest.raises(InvalidInput):
        parse_map(text)


def test_error_position():
    with pytest.raises(ParseError) as exc:
        parse("z + * 2")
    assert exc.value.pos == 4


@pytest.mark.parametrize("text", ["z", "3", "(z^2)/(z)", "z^30", "1/(z-z)"])
def test_semantic_errors(text):
    with pytest.raises(InvalidInput):
        parse_map(text)


leaf = st.one_of(st.just(Var()),
                 st.integers(0, 9).map(lambda n: Num(QI(n))),
                 st.integers(1, 9).map(lambda n: Num(QI(0, n))),
                 st.sampled_from(["0.5", "1.25"]).map(lambda s: Num(QI(__import__("fractions").Fraction(s)))))
trees = st.recursive(
    leaf,
    lambda sub: st.one_of(
        st.builds(Neg, sub),
        st.builds(BinOp, st.sampled_from("+-*/"), sub, sub),
        st.builds(Pow, sub, st.integers(0, 3).map(lambda n: Num(QI(n))))),
    max_leaves=8)


@settings(max_examples=200)
@given(trees)
def test_pretty_round_trip(node):
    assert parse(pretty(node)) == node
