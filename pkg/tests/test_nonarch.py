from fractions import Fraction

import pytest
from hypothesis import assume, given, settings, strategies as st

from feketelab.errors import BudgetError, DegenerateMapError, InvalidInput
from feketelab.nonarch import (LogValue, PadicBall, absp, delta_can, gauss_green, gromov_check, hsia,
                               join, median, resultant_rational, rho, vf_padic, vp)

B = PadicBall
Z = Fraction(0)


def lv(p, q):
    return LogValue(p, Fraction(q))


def test_valuation_examples():
    assert vp(12, 2) == 2
    assert vp(Fraction(1, 9), 3) == -2
    assert vp(0, 5) == float("inf")
    assert absp(Fraction(3, 4), 2) == 4


rationals = st.fractions(max_denominator=10 ** 6).filter(lambda x: x != 0)


@given(rationals, rationals, st.sampled_from([2, 3, 5, 7]))
def test_abs_multiplicative(x, y, p):
    assert absp(x * y, p) == absp(x, p) * absp(y, p)
    assert absp(x + y, p) <= max(absp(x, p), absp(y, p))


def test_join_examples():
    assert join(B(3, 0, 2), B(3, 1, 1)) == B.gauss(3)
    S = B(3, Fraction(1, 7), 2)
    assert join(S, S) == S
    assert join(B(3, 9, 3), B(3, 0, 1)) == B(3, 0, 1)


def test_kernel_examples():
    assert hsia(B(3, 0, 2), B(3, 1, 1)) == lv(3, 0)
    assert rho(B(3, 0, 2), B(3, 0, 0)) == lv(3, 2)
    assert rho(B(3, 0, 2), B(3, 1, 1)) == lv(3, 3)
    with pytest.raises(InvalidInput):
        rho(B.point(3, 0), B.gauss(3))
    with pytest.raises(InvalidInput):
        join(B.gauss(2), B.gauss(3))


def test_gromov_examples():
    assert gromov_check(B(3, 0, 2), B(3, 1, 1)) == (lv(3, 0), lv(3, 0))
    can = B.gauss(3)
    assert gromov_check(can, can) == (lv(3, 0), lv(3, 0))
    # nested chain inside the unit ball: both sides are -log 3
    assert gromov_check(B(3, 0, 1), B(3, 0, 2)) == (lv(3, -1), lv(3, -1))


def test_delta_can_outside_unit_ball():
    S = B(2, Fraction(1, 4), 0)      # |S| = 4
    T = B(2, 8, 1)
    assert delta_can(S, T) == lv(2, 2 - 2)       # join has diam 4; divided by 4 * 1
    assert median(S, T, B.gauss(2)) == B(2, 0, 0)


def balls(p):
    centers = st.fractions(max_denominator=p ** 4).map(lambda x: Fraction(x) * p ** 0)
    radii = st.fractions(min_value=-4, max_value=6, max_denominator=3)
    return st.builds(lambda c, r: B(p, c, r), centers, radii)


@pytest.mark.parametrize("p", [2, 3, 5])
def test_gromov_identity_random(p):
    @settings(max_examples=1000, deadline=None)
    @given(balls(p), balls(p))
    def check(S, T):
        lhs, rhs = gromov_check(S, T)
        assert lhs == rhs
    check()


@pytest.mark.parametrize("p", [2, 3, 5])
def test_ultrametric_and_rho_metric(p):
    @settings(max_examples=300, deadline=None)
    @given(balls(p), balls(p), balls(p))
    def check(S, T, U):
        # strong triangle inequality for the Hsia kernel
        assert hsia(S, U) <= max(hsia(S, T), hsia(T, U), key=lambda v: v.q)
        assert rho(S, T) == rho(T, S)
        assert rho(S, S) == lv(p, 0)
        assert (rho(S, T).q == 0) == (S == T)
        assert rho(S, U).q <= rho(S, T).q + rho(T, U).q
    check()


def test_vf_padic_examples():
    assert vf_padic([1, 0, 0], [0, 0, 1], 2) == lv(2, 0)
    assert vf_padic([1, 0, 1], [0, 2, 0], 2) == lv(2, 1)
    assert str(vf_padic([1, 0, 1], [0, 2, 0], 2)) == "1"
    assert vf_padic([1, 0, 1], [0, 2, 0], 3) == lv(3, 0)
    assert resultant_rational([1, 0, 1], [0, 2, 0]) == 4
    with pytest.raises(DegenerateMapError):
        vf_padic([1, -1, 0], [1, 0, -1], 2)
    with pytest.raises(InvalidInput):
        vf_padic([1, 0, 1], [0, 2, 0], 4)


def test_gauss_green_examples():
    gg = gauss_green([1, 0, 0], [0, 0, 1], 3, 4)
    assert all(v == lv(3, 0) for v in gg.values) and gg.phi_self == lv(3, 0)
    # F^2 = (X^4 + 6X^2Y^2 + Y^4, 4X^3Y + 4XY^3): a unit coefficient survives at every level
    gg = gauss_green([1, 0, 1], [0, 2, 0], 2, 3)
    assert [str(v) for v in gg.values] == ["0", "0", "0"]
    assert gg.phi_self == lv(2, -1)
    assert gg.to_dict()["VF_logp"] == "1"


def test_gauss_green_bad_reduction():
    # F = (2X^2 + Y^2 / 2 ... ) scaled: the Gauss norm of 2F is |2|_2 = 1/2
    gg = gauss_green([2, 0, 0], [0, 0, 2], 2, 3)
    assert gg.values[0] == lv(2, Fraction(-1, 2))
    assert gg.values[1] == lv(2, Fraction(-3, 4))
    # g_k -> -1 * log 2 = log|2| / (d - 1)
    assert gg.differences == [gg.values[1] - gg.values[0], gg.values[2] - gg.values[1]]


def test_good_reduction_sample():
    maps = [([1, 0, 0], [0, 0, 1]), ([1, 1, 0], [0, 0, 1]), ([1, 0, 3], [0, 0, 1]),
            ([1, 0, 0, 1], [0, 1, 0, 1]), ([1, 2, 0], [0, 1, 1]), ([1, 0, 0], [1, 1, 1])]
    good = 0
    for P, Q in maps:
        if vp(resultant_rational(P, Q), 2) != 0:
            continue
        good += 1
        gg = gauss_green(P, Q, 2, 4 if len(P) == 3 else 3)
        assert all(v == lv(2, 0) for v in gg.values)
    assert good >= 5


def test_gauss_green_budget():
    with pytest.raises(BudgetError):
        gauss_green([1, 0, 0], [0, 0, 1], 2, 7)


def test_logvalue_arithmetic():
    a, b = lv(2, Fraction(1, 3)), lv(2, 2)
    assert (a + b).q == Fraction(7, 3) and (a - b).q == Fraction(-5, 3)
    assert LogValue.neg_inf(2) < a
    assert float(lv(2, 1)) == pytest.approx(0.6931471805599453)
    with pytest.raises(InvalidInput):
        a + lv(3, 1)
