"""Tests for the exact family constructions"""
from fractions import Fraction

import pytest
from pydantic import ValidationError

from multiop.errors import ParameterError
from multiop.exact import ExactPolynomial, MultiIndex
from multiop.families import (
    Family,
    FamilyParams,
    build_jp,
    build_meijer_stepline,
    build_ml_explicit,
    build_polynomial,
    orthogonality_check,
)


@pytest.fixture
def jp2():
    return FamilyParams.jacobi_pineiro(["0", "1/2"], "0")


@pytest.fixture
def ml2():
    return FamilyParams.multiple_laguerre(["0", "1/2"])


class TestFamilyParams:
    def test_parses_comma_strings(self):
        params = FamilyParams(family="jp", r=2, alpha="0,1/3", beta="1/2")
        assert params.family == Family.JACOBI_PINEIRO
        assert params.alpha == (Fraction(0), Fraction(1, 3))
        assert params.beta == Fraction(1, 2)

    def test_integer_alpha_difference_violates_normality(self):
        with pytest.raises(ParameterError, match="violates normality"):
            FamilyParams.jacobi_pineiro([0, 1], 0)

    def test_alpha_must_exceed_minus_one(self):
        with pytest.raises(ParameterError):
            FamilyParams.multiple_laguerre(["-1"])

    def test_jacobi_pineiro_needs_beta(self):
        with pytest.raises(ValidationError, match="needs beta"):
            FamilyParams(family="jp", r=1, alpha=[0])

    def test_meijer_nu_must_be_integers(self):
        with pytest.raises(ParameterError):
            FamilyParams.meijer_g(["1/2"])
        assert FamilyParams.meijer_g([0, 2]).nu == (0, 2)

    def test_constructors_raise_parameter_errors(self):
        with pytest.raises(ParameterError) as excinfo:
            FamilyParams.create(family="jp", r=1, alpha=[0])
        assert str(excinfo.value) == "Jacobi-Piñeiro family needs beta"
        assert isinstance(excinfo.value.__cause__, ValidationError)

    def test_index_length_is_checked(self, jp2):
        with pytest.raises(ParameterError):
            build_polynomial(jp2, MultiIndex((1, 1, 1)))


class TestJacobiPineiro:
    def test_shifted_legendre(self):
        params = FamilyParams.jacobi_pineiro([0], 0)
        p = build_jp(params, MultiIndex((2,)))
        assert p.coeffs == (Fraction(1, 6), -1, 1)

    def test_small_multiple_index(self, jp2):
        p = build_jp(jp2, MultiIndex((1, 1)))
        assert p.coeffs == (Fraction(1, 7), Fraction(-20, 21), 1)

    def test_zero_index_is_one(self, jp2):
        assert build_jp(jp2, MultiIndex((0, 0))) == ExactPolynomial.one()

    @pytest.mark.parametrize("entries", [(1, 0), (2, 1), (3, 3), (1, 4)])
    def test_orthogonality_holds_exactly(self, jp2, entries):
        n = MultiIndex(entries)
        p = build_jp(jp2, n)
        assert p.degree == n.size and p.is_monic
        assert orthogonality_check(jp2, p, n)

    def test_orthogonality_reports_a_witness(self, jp2):
        n = MultiIndex((1, 1))
        p = build_jp(jp2, n) + ExactPolynomial.x()
        result = orthogonality_check(jp2, p, n)
        assert not result
        assert result.witness != 0
        assert (result.weight, result.power) == (0, 0)


class TestMultipleLaguerre:
    def test_classical_laguerre(self):
        params = FamilyParams.multiple_laguerre([0])
        assert build_ml_explicit(params, MultiIndex((2,))).coeffs == (2, -4, 1)
        assert build_ml_explicit(params, MultiIndex((1,))).coeffs == (-1, 1)

    @pytest.mark.parametrize("entries", [(1, 1), (2, 1), (1, 3), (3, 3)])
    def test_orthogonality_holds_exactly(self, ml2, entries):
        n = MultiIndex(entries)
        p = build_ml_explicit(ml2, n)
        assert p.is_monic and p.degree == n.size
        assert orthogonality_check(ml2, p, n)

    def test_three_weights(self):
        params = FamilyParams.multiple_laguerre(["0", "1/3", "2/3"])
        n = MultiIndex((2, 2, 1))
        assert orthogonality_check(params, build_ml_explicit(params, n), n)


class TestMeijerG:
    def test_single_weight_is_laguerre(self):
        assert build_meijer_stepline([0], 2).coeffs == (2, -4, 1)

    def test_two_weights(self):
        assert build_meijer_stepline([0, 0], 2).coeffs == (4, -8, 1)
        assert build_meijer_stepline([0, 0], 0) == ExactPolynomial.one()

    def test_stepline_uses_the_size_only(self):
        params = FamilyParams.meijer_g([0, 1])
        p = build_polynomial(params, MultiIndex((2, 1)))
        assert p == build_meijer_stepline([0, 1], 3)
        assert p.is_monic

    def test_no_orthogonality_conditions(self):
        params = FamilyParams.meijer_g([0, 0])
        n = MultiIndex((1, 1))
        with pytest.raises(ParameterError):
            orthogonality_check(params, build_polynomial(params, n), n)

    def test_bad_nu(self):
        with pytest.raises(ParameterError):
            build_meijer_stepline([], 2)
        with pytest.raises(ParameterError):
            build_meijer_stepline([0], -1)
