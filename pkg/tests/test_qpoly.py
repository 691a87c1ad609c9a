"""
Laurent polynomial arithmetic over Q[q, q^-1].
Ring axioms are property-tested; the q-special functions are checked on known values.
"""
import sys
from fractions import Fraction
from pathlib import Path

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

project_root = Path(__file__).parent.parent
sys.path.insert(0, str(project_root))

from utils.errors import InexactDivisionError
from utils.qpoly import (ONE, ZERO, LaurentPoly, LaurentRatio, lp_arith, q_binomial, q_brace,
                         q_brace_factorial, q_factorial_symmetric, q_int_symmetric, q_pow)

coefs = st.fractions(min_value=-5, max_value=5, max_denominator=6)
polys = st.dictionaries(st.integers(-6, 6), coefs, max_size=5).map(LaurentPoly)


class TestRingAxioms:
    """Q[q, q^-1] is a commutative ring."""

    @given(polys, polys, polys)
    @settings(max_examples=60, deadline=None)
    def test_associativity(self, a, b, c):
        assert (a + b) + c == a + (b + c)
        assert (a * b) * c == a * (b * c)

    @given(polys, polys)
    @settings(max_examples=60, deadline=None)
    def test_commutativity(self, a, b):
        assert a + b == b + a
        assert a * b == b * a

    @given(polys, polys, polys)
    @settings(max_examples=60, deadline=None)
    def test_distributivity(self, a, b, c):
        assert a * (b + c) == a * b + a * c

    @given(polys)
    @settings(max_examples=60, deadline=None)
    def test_identities(self, a):
        assert a + ZERO == a
        assert a * ONE == a
        assert (a - a).is_zero()

    @given(polys, polys)
    @settings(max_examples=40, deadline=None)
    def test_exact_division_recovers_factor(self, a, b):
        if b.is_zero():
            return
        assert (a * b).exact_div(b) == a, f"({a}) * ({b}) / ({b}) != {a}"

    @given(polys, st.floats(min_value=0.2, max_value=2.0))
    @settings(max_examples=40, deadline=None)
    def test_evaluation_is_a_homomorphism(self, a, x):
        b = a * a + q_pow(1)
        assert b.evaluate(x) == pytest.approx(a.evaluate(x) ** 2 + x, rel=1e-9, abs=1e-9)


class TestLaurentPoly:
    """Construction, comparison and text form."""

    def test_zero_coefficients_are_dropped(self):
        p = LaurentPoly({1: 0, 2: 3})
        assert p.terms == {2: Fraction(3)}
        assert LaurentPoly({0: 0}).is_zero()

    def test_negative_exponents(self):
        p = q_pow(-3) * q_pow(5)
        assert p == q_pow(2)
        assert p.min_exp == 2 and p.max_exp == 2

    def test_equality_with_int(self):
        assert LaurentPoly.const(4) == 4
        assert q_pow(1) != 1

    def test_constant_hash_matches_scalar(self):
        assert len({LaurentPoly.const(5), 5}) == 1
        assert len({LaurentPoly.const(Fraction(1, 3)), Fraction(1, 3)}) == 1
        assert hash(ZERO) == hash(0)
        assert {ONE: "one"}[1] == "one"
        assert len({q_pow(1), q_pow(2), LaurentPoly.const(1)}) == 3

    def test_inexact_division_raises(self):
        with pytest.raises(InexactDivisionError):
            (q_pow(2) + ONE).exact_div(q_pow(1) + ONE)

    def test_division_by_zero_raises(self):
        with pytest.raises(ZeroDivisionError):
            q_pow(1).exact_div(ZERO)

    def test_negative_power_of_monomial(self):
        assert (q_pow(1) * 2) ** -2 == LaurentPoly({-2: Fraction(1, 4)})
        with pytest.raises(InexactDivisionError):
            (q_pow(1) + ONE) ** -1

    def test_text_form(self):
        p = LaurentPoly({-2: 1, 0: -3, 1: Fraction(1, 2)})
        assert p.to_text() == "q^-2 + -3 + 1/2*q"
        assert LaurentPoly.from_text(p.to_text()) == p
        assert ZERO.to_text() == "0"

    def test_malformed_text_raises(self):
        with pytest.raises(ValueError):
            LaurentPoly.from_text("q^^2")

    def test_dilate_and_shift(self):
        p = q_pow(1) + q_pow(-1)
        assert p.dilate(2) == q_pow(2) + q_pow(-2)
        assert p.shift(1) == q_pow(2) + ONE

    def test_evaluate_rejects_nonpositive_q(self):
        with pytest.raises(ValueError):
            q_pow(1).evaluate(0.0)

    def test_evaluate_exact(self):
        assert (q_pow(2) + q_pow(-1)).evaluate_exact(Fraction(1, 2)) == Fraction(9, 4)

    def test_lp_arith_rejects_unknown_op(self):
        with pytest.raises(ValueError):
            lp_arith(ONE, ONE, "div")


class TestLaurentRatio:
    """Fractions compared by cross-multiplication."""

    def test_cross_multiplication_equality(self):
        a = LaurentRatio(q_pow(2) - ONE, q_pow(1) - ONE)
        assert a == q_pow(1) + ONE
        assert a.to_laurent() == q_pow(1) + ONE

    def test_arithmetic(self):
        half = LaurentRatio(ONE, 2)
        assert half + half == ONE
        assert half * 4 == 2
        assert (LaurentRatio(ONE) - half) / half == ONE

    def test_zero_denominator_raises(self):
        with pytest.raises(ZeroDivisionError):
            LaurentRatio(ONE, ZERO)

    def test_evaluate(self):
        r = LaurentRatio(q_pow(2), q_pow(1) + ONE)
        assert r.evaluate(2.0) == pytest.approx(4.0 / 3.0)


class TestQSpecialFunctions:
    """Balanced q-integers, q-binomials and brace factorials."""

    def test_q_integers(self):
        assert q_int_symmetric(0).is_zero()
        assert q_int_symmetric(1) == ONE
        assert q_int_symmetric(3) == q_pow(2) + ONE + q_pow(-2)

    def test_q_factorial(self):
        assert q_factorial_symmetric(3) == q_int_symmetric(2) * q_int_symmetric(3)

    def test_q_binomial_values(self):
        assert q_binomial(4, 0) == ONE
        assert q_binomial(4, 4) == ONE
        assert q_binomial(4, 2) == q_pow(4) + q_pow(2) + 2 + q_pow(-2) + q_pow(-4)

    def test_q_binomial_pascal_rule(self):
        for n in range(1, 7):
            for m in range(1, n):
                lhs = q_binomial(n, m)
                rhs = q_binomial(n - 1, m - 1) * q_pow(m - n) + q_binomial(n - 1, m) * q_pow(m)
                assert lhs == rhs, f"Pascal rule fails at ({n}, {m})"

    def test_q_binomial_at_one(self):
        assert q_binomial(6, 3).evaluate(1.0) == pytest.approx(20.0)

    def test_q_binomial_rejects_bad_arguments(self):
        with pytest.raises(ValueError):
            q_binomial(2, 3)
        with pytest.raises(ValueError):
            q_binomial(-1, 0)

    def test_brace(self):
        r = q_pow(2)
        assert q_brace(3, r) == ONE + q_pow(2) + q_pow(4)
        assert q_brace_factorial(3, r) == (ONE + q_pow(2)) * (ONE + q_pow(2) + q_pow(4))
        assert q_brace_factorial(0, r) == ONE

    def test_brace_requires_pure_power(self):
        with pytest.raises(ValueError):
            q_brace(2, q_pow(1) * 2)
