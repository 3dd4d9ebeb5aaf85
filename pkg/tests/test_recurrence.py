"""Tests for the nearest-neighbour recurrences and the limit surfaces"""
from fractions import Fraction

import pytest
from mpmath import mp

from multiop.errors import ParameterError
from multiop.exact import MultiIndex
from multiop.families import Family, FamilyParams, build_polynomial
from multiop.recurrence import (
    RecurrenceBuilder,
    build_diagonal,
    build_surface,
    build_via_recurrence,
    canonical_path,
    diagonal_surface,
    diagonal_target,
    jp_limit_coeffs,
    limit_errors,
    ml_limit_coeffs,
    nn_coeffs,
    ray_index,
    recurrence_residual,
    residues,
    solve_z,
    stepline_path,
)

LEGENDRE = FamilyParams.jacobi_pineiro([0], 0)
LAGUERRE = FamilyParams.multiple_laguerre([0])
JP2 = FamilyParams.jacobi_pineiro(["0", "1/2"], "0")
ML2 = FamilyParams.multiple_laguerre(["0", "1/2"])
JP3 = FamilyParams.jacobi_pineiro(["0", "1/3", "2/3"], "1/2")


class TestCoefficients:
    def test_legendre_coefficients(self):
        assert nn_coeffs(LEGENDRE, MultiIndex((0,))).b == (Fraction(1, 2),)
        assert nn_coeffs(LEGENDRE, MultiIndex((1,))).a == (Fraction(1, 12),)
        assert nn_coeffs(LEGENDRE, MultiIndex((3,))).a == (Fraction(9, 140),)

    def test_laguerre_coefficients(self):
        coeffs = nn_coeffs(LAGUERRE, MultiIndex((4,)))
        assert coeffs.a == (16,)
        assert coeffs.b == (9,)

    def test_empty_direction_has_no_a(self):
        coeffs = nn_coeffs(JP2, MultiIndex((2, 0)))
        assert coeffs.a[1] == 0

    def test_meijer_has_no_recurrence_here(self):
        with pytest.raises(ParameterError):
            nn_coeffs(FamilyParams.meijer_g([0, 0]), MultiIndex((1, 1)))

    @pytest.mark.parametrize("params", [JP2, ML2], ids=["jp", "ml"])
    @pytest.mark.parametrize("entries", [(0, 0), (1, 0), (0, 2), (2, 1), (2, 2)])
    @pytest.mark.parametrize("k", [0, 1])
    def test_recurrence_is_an_exact_identity(self, params, entries, k):
        assert recurrence_residual(params, MultiIndex(entries), k).is_zero

    def test_three_weight_identity(self):
        for k in range(3):
            assert recurrence_residual(JP3, MultiIndex((2, 1, 1)), k).is_zero


class TestConstruction:
    def test_paths(self):
        n = MultiIndex((2, 1, 3))
        assert canonical_path(n) == [0, 0, 1, 2, 2, 2]
        assert stepline_path(n) == [0, 1, 2, 0, 2, 2]

    @pytest.mark.parametrize("params", [JP2, ML2], ids=["jp", "ml"])
    def test_every_path_gives_the_same_polynomial(self, params):
        n = MultiIndex((3, 2))
        direct = build_polynomial(params, n)
        assert build_via_recurrence(params, n) == direct
        assert build_via_recurrence(params, n, stepline_path(n)) == direct
        assert build_via_recurrence(params, n, [1, 0, 1, 0, 0]) == direct

    def test_diagonal(self):
        assert build_diagonal(JP3, 2) == build_polynomial(JP3, MultiIndex((2, 2, 2)))

    def test_path_must_reach_the_index(self):
        with pytest.raises(ParameterError):
            build_via_recurrence(JP2, MultiIndex((1, 1)), [0, 0])
        with pytest.raises(ParameterError):
            build_via_recurrence(JP2, MultiIndex((1, 1)), [0, 2])

    def test_builder_memoizes_neighbours(self):
        builder = RecurrenceBuilder(ML2)
        p = builder.get(MultiIndex((2, 2)))
        assert p == build_polynomial(ML2, MultiIndex((2, 2)))
        assert builder.get(MultiIndex((2, 1))) == build_polynomial(ML2, MultiIndex((2, 1)))


class TestLimits:
    def test_legendre_limits(self):
        limits = jp_limit_coeffs([1])
        assert limits.a_limit == (Fraction(1, 16),)
        assert limits.b_limit == (Fraction(1, 2),)

    def test_laguerre_limits(self):
        limits = ml_limit_coeffs([1])
        assert limits.a_limit == (1,)
        assert limits.b_limit == (2,)

    def test_ray_validation(self):
        with pytest.raises(ParameterError):
            jp_limit_coeffs(["1/2", "1/3"])
        with pytest.raises(ParameterError):
            ml_limit_coeffs(["1/2", "1/2"])
        with pytest.raises(ParameterError):
            ml_limit_coeffs(["3/2", "-1/2"])

    def test_ray_index(self):
        assert ray_index(["1/3", "2/3"], 10) == MultiIndex((3, 6))

    @pytest.mark.parametrize("params", [JP2, ML2], ids=["jp", "ml"])
    def test_scaled_coefficients_approach_the_limits(self, params):
        rows = limit_errors(params, ["1/3", "2/3"], [12, 48, 192])
        a_errors = [row[1] for row in rows]
        b_errors = [row[2] for row in rows]
        assert a_errors[-1] < a_errors[0] and b_errors[-1] < b_errors[0]
        assert a_errors[-1] < 0.05 and b_errors[-1] < 0.05

    @pytest.mark.parametrize("factory", [jp_limit_coeffs, ml_limit_coeffs])
    def test_residues_recover_the_a_limits(self, factory):
        limits = factory(["1/4", "3/4"])
        surface = build_surface(limits)
        assert residues(surface) == list(limits.a_limit)
        assert surface.B.degree == 2


class TestSurfaces:
    @pytest.mark.parametrize("family", [Family.JACOBI_PINEIRO, Family.MULTIPLE_LAGUERRE])
    @pytest.mark.parametrize("r", [1, 2, 3, 4])
    def test_diagonal_surface_reduces_to_the_target(self, family, r):
        assert diagonal_surface(r, family).equation() == diagonal_target(r, family)

    def test_meijer_has_no_surface(self):
        with pytest.raises(ParameterError):
            diagonal_surface(2, Family.MEIJER_G)

    def test_legendre_branch(self):
        surface = diagonal_surface(1, Family.JACOBI_PINEIRO)
        z = solve_z(-1, surface)
        with mp.workdps(40):
            assert abs(z - (-mp.mpf(1) / 2 - mp.sqrt(2)) / 2) < mp.mpf(10) ** -30

    def test_branch_satisfies_the_curve_off_the_axis(self):
        surface = diagonal_surface(2, Family.MULTIPLE_LAGUERRE)
        x = mp.mpc("0.5", "1")
        z = solve_z(x, surface)
        with mp.workdps(40):
            assert abs(surface.residual(z, x)) < mp.mpf(10) ** -25

    def test_rational_points_are_rounded_at_working_precision(self):
        surface = diagonal_surface(2, Family.JACOBI_PINEIRO)
        z = solve_z(Fraction(-1, 3), surface)
        with mp.workdps(40):
            assert abs(surface.residual(z, -mp.mpf(1) / 3)) < mp.mpf(10) ** -30
        assert solve_z(Fraction(-1), surface) == solve_z(-1, surface)

    def test_points_on_the_cut_are_rejected(self):
        with pytest.raises(ParameterError, match="branch cut"):
            solve_z(Fraction(1, 2), diagonal_surface(2, Family.JACOBI_PINEIRO))
