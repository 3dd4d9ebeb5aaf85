"""Tests for the exact rational kernels"""
from fractions import Fraction
from math import gcd

import pytest
from hypothesis import given, settings, strategies as st
from mpmath import mp

from multiop.errors import IndeterminateSignError, ParameterError, SingularSystemError
from multiop.exact import (
    ExactPolynomial,
    MultiIndex,
    as_rational,
    beta_moment_ratio,
    beta_moments,
    gamma_moment_ratio,
    generalized_binomial,
    integer_sign,
    lagrange_interpolate,
    poly_eval_escalated,
    poly_eval_float,
    solve_exact,
)

fractions = st.fractions(min_value=-10, max_value=10, max_denominator=50)


class TestAsRational:
    def test_accepts_strings_ints_and_fractions(self):
        assert as_rational("1/3") == Fraction(1, 3)
        assert as_rational("0.25") == Fraction(1, 4)
        assert as_rational(7) == Fraction(7)
        assert as_rational(Fraction(2, 5)) == Fraction(2, 5)

    @pytest.mark.parametrize("bad", ["abc", "1/0", True, 0.5, None])
    def test_rejects_non_rationals(self, bad):
        with pytest.raises(ParameterError):
            as_rational(bad)


    @given(p=fractions, q=fractions)
    @settings(max_examples=100, deadline=None)
    def test_arithmetic_stays_in_lowest_terms(self, p, q):
        results = [p + q, p - q, p * q] + ([p / q] if q else [])
        for value in results:
            assert gcd(value.numerator, value.denominator) == 1 and value.denominator > 0
        assert as_rational(f"{p.numerator * 6}/{p.denominator * 6}") == p


class TestMultiIndex:
    def test_stepline_fills_directions_in_order(self):
        assert MultiIndex.stepline(7, 3).entries == (3, 2, 2)
        assert MultiIndex.stepline(6, 3).entries == (2, 2, 2)
        assert MultiIndex.stepline(0, 2).entries == (0, 0)

    def test_raise_and_lower(self):
        n = MultiIndex((2, 1))
        assert n.raised(1).entries == (2, 2)
        assert n.lowered(0).entries == (1, 1)
        assert n.size == 3 and n.r == 2
        assert str(n) == "(2,1)"

    def test_lowering_an_empty_direction_fails(self):
        with pytest.raises(ParameterError):
            MultiIndex((0, 1)).lowered(0)

    def test_negative_entries_are_rejected(self):
        with pytest.raises(ParameterError):
            MultiIndex((1, -1))


class TestExactPolynomial:
    def test_trailing_zeros_are_stripped(self):
        p = ExactPolynomial((1, 2, 0, 0))
        assert p.degree == 1
        assert ExactPolynomial((0,)).is_zero
        assert ExactPolynomial().degree == -1

    def test_from_roots_and_evaluation(self):
        p = ExactPolynomial.from_roots(["1/2", 3])
        assert p.coeffs == (Fraction(3, 2), Fraction(-7, 2), Fraction(1))
        assert p(Fraction(1, 2)) == 0
        assert p(0) == Fraction(3, 2)

    def test_substitute_and_derivative(self):
        p = ExactPolynomial((0, 0, 1))
        assert p.substitute(2, 1).coeffs == (1, 4, 4)
        assert p.derivative().coeffs == (0, 2)

    def test_integer_form_keeps_sign(self):
        p = ExactPolynomial((Fraction(-1, 6), Fraction(1, 3)))
        assert p.integer_form() == (-1, 2)

    def test_string_form(self):
        assert str(ExactPolynomial((Fraction(1, 6), -1, 1))) == "x^2 - x + 1/6"
        assert str(ExactPolynomial()) == "0"

    @given(a=st.lists(fractions, max_size=5), b=st.lists(fractions, max_size=5), x=fractions)
    @settings(max_examples=60, deadline=None)
    def test_ring_operations_agree_with_evaluation(self, a, b, x):
        p, q = ExactPolynomial(tuple(a)), ExactPolynomial(tuple(b))
        assert (p * q)(x) == p(x) * q(x)
        assert (p + q)(x) == p(x) + q(x)
        assert (p - q)(x) == p(x) - q(x)

    @given(coeffs=st.lists(fractions, min_size=1, max_size=6), x=fractions)
    @settings(max_examples=60, deadline=None)
    def test_integer_sign_matches_exact_sign(self, coeffs, x):
        p = ExactPolynomial(tuple(coeffs))
        value = p(x)
        expected = (value > 0) - (value < 0)
        assert integer_sign(p.integer_form(), x) == expected


class TestIntervalEvaluation:
    def test_enclosure_contains_exact_value(self):
        p = ExactPolynomial((Fraction(1, 6), -1, 1))
        evaluation = poly_eval_float(p, Fraction(1, 3), bits=64)
        exact = p(Fraction(1, 3))
        assert evaluation.contains(exact)
        assert not evaluation.contains(exact + Fraction(1, 2**40))
        assert evaluation.sign == -1

    def test_escalation_settles_a_close_sign(self):
        eps = Fraction(1, 2**80)
        p = ExactPolynomial.from_roots([Fraction(1, 3) + eps])
        evaluation = poly_eval_escalated(p, Fraction(1, 3), bits=53)
        assert evaluation.sign == -1
        assert evaluation.bits > 53

    def test_escalation_gives_up_at_an_exact_zero(self):
        p = ExactPolynomial.from_roots([Fraction(1, 3)])
        with pytest.raises(IndeterminateSignError):
            poly_eval_escalated(p, Fraction(1, 3), bits=53, max_bits=256)

    @given(coeffs=st.lists(fractions, min_size=1, max_size=8), x=fractions,
           bits=st.sampled_from([53, 64, 128]))
    @settings(max_examples=1000, deadline=None)
    def test_enclosure_agrees_with_exact_evaluation(self, coeffs, x, bits):
        p = ExactPolynomial(tuple(coeffs))
        evaluation = poly_eval_float(p, x, bits)
        assert evaluation.contains(p(x))

    def test_huge_coefficients_need_escalation_near_a_root(self):
        # 10^40 times a Wilkinson-style product with roots k/21
        p = ExactPolynomial.from_roots([Fraction(k, 21) for k in range(1, 21)]) * 10 ** 40
        assert max(abs(c) for c in p.coeffs) >= 10 ** 40
        x = Fraction(1, 21) + Fraction(1, 2 ** 70)
        with pytest.raises(IndeterminateSignError):
            poly_eval_float(p, x, bits=53).require_sign()
        evaluation = poly_eval_escalated(p, x, bits=53)
        assert evaluation.bits > 53
        assert evaluation.sign == -1 == (p(x) > 0) - (p(x) < 0)

    def test_constant_term_at_zero(self):
        p = ExactPolynomial((Fraction(3, 4), 5, -7))
        evaluation = poly_eval_float(p, 0)
        assert evaluation.lower == evaluation.upper == mp.mpf(0.75)

    def test_too_few_bits(self):
        with pytest.raises(ParameterError):
            poly_eval_float(ExactPolynomial.one(), 0, bits=32)


class TestMoments:
    def test_beta_moments(self):
        assert beta_moments(0, 0, 3) == [1, Fraction(1, 2), Fraction(1, 3), Fraction(1, 4)]
        assert beta_moment_ratio(Fraction(1, 2), 0, 1) == Fraction(3, 5)

    def test_gamma_moments(self):
        assert gamma_moment_ratio(0, 4) == 24
        assert gamma_moment_ratio(Fraction(1, 2), 1) == Fraction(3, 2)

    @given(a=st.fractions(min_value=Fraction(-9, 10), max_value=5, max_denominator=20),
           beta=st.fractions(min_value=Fraction(-9, 10), max_value=5, max_denominator=20),
           m1=st.integers(0, 6), m2=st.integers(0, 6))
    @settings(max_examples=100, deadline=None)
    def test_beta_ratio_telescopes(self, a, beta, m1, m2):
        assert beta_moment_ratio(a, beta, m1 + m2) == beta_moment_ratio(a, beta, m1) * beta_moment_ratio(a + m1, beta, m2)

    @given(a=st.fractions(min_value=Fraction(-9, 10), max_value=5, max_denominator=20), m=st.integers(0, 10))
    @settings(max_examples=100, deadline=None)
    def test_gamma_ratio_step(self, a, m):
        assert gamma_moment_ratio(a, m + 1) == gamma_moment_ratio(a, m) * (a + m + 1)
        assert gamma_moment_ratio(a, 0) == 1

    def test_exponents_at_or_below_minus_one_are_rejected(self):
        with pytest.raises(ParameterError):
            beta_moments(-1, 0, 2)
        with pytest.raises(ParameterError):
            gamma_moment_ratio(Fraction(-3, 2), 1)

    def test_generalized_binomial(self):
        assert generalized_binomial(5, 2) == 10
        assert generalized_binomial(Fraction(1, 2), 2) == Fraction(-1, 8)
        assert generalized_binomial(7, 0) == 1


class TestLinearAlgebra:
    def test_solve_exact(self):
        solution = solve_exact([[2, 1], [1, 3]], [3, 5])
        assert solution == [Fraction(4, 5), Fraction(7, 5)]

    def test_solve_needs_pivoting(self):
        assert solve_exact([[0, 1], [1, 0]], ["1/2", 2]) == [2, Fraction(1, 2)]

    def test_singular_system(self):
        with pytest.raises(SingularSystemError):
            solve_exact([[1, 2], [2, 4]], [1, 1])

    def test_lagrange_interpolation(self):
        p = lagrange_interpolate([0, 1, 2], [1, 2, 5])
        assert p.coeffs == (1, 0, 1)
        with pytest.raises(ParameterError):
            lagrange_interpolate([1, 1], [0, 0])
