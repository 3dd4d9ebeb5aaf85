"""End-to-end acceptance checks: exact identities, closed-form anchors and convergence trends.

The convergence runs are marked slow; deselect them with -m "not slow".
"""
import asyncio
from fractions import Fraction
from itertools import product

import numpy as np
import pytest
from mpmath import mp

from multiop.asymptotics import (
    arcsine_density,
    c_r,
    density_at,
    density_v,
    fc_branch,
    g2_closed,
    marchenko_pastur_density,
    mellin_check_g,
    mellin_check_u,
    moment,
    endpoint_exponent,
    phi_max,
    phi_point,
    stieltjes_w_from_branch,
    u2_closed,
    v2_closed,
)
from multiop.exact import MultiIndex
from multiop.experiments import ExperimentConfig, run_compare
from multiop.families import FamilyParams, build_polynomial, orthogonality_check
from multiop.recurrence import (
    RecurrenceBuilder,
    build_via_recurrence,
    canonical_path,
    jp_limit_coeffs,
    nn_coeffs,
    recurrence_residual,
    stepline_path,
)
from multiop.zeros import HALF_LINE, UNIT_INTERVAL, interlacing_check, isolate_zeros, refine

JP = FamilyParams.jacobi_pineiro(["1/3", "1/2"], "1/4")
ML = FamilyParams.multiple_laguerre(["1/3", "1/2"])
SIZES = ["5", "10", "20", "40"]
# generous bound on the n=40 Kolmogorov distance of the Jacobi-Piñeiro run
JP_KS_BASELINE = 0.05


def indices_up_to(size: int):
    return [MultiIndex(e) for e in product(range(size + 1), repeat=2) if sum(e) <= size]


def strictly_decreasing(values) -> bool:
    return all(b < a for a, b in zip(values, values[1:]))


def as_mpf(q: Fraction):
    return mp.mpf(q.numerator) / q.denominator


@pytest.mark.parametrize("params", [JP, ML], ids=["jp", "ml"])
def test_recurrence_identity_up_to_size_eight(params):
    for n in indices_up_to(8):
        for k in range(2):
            assert recurrence_residual(params, n, k).is_zero, (n, k)


@pytest.mark.parametrize("params", [JP, ML], ids=["jp", "ml"])
def test_orthogonality_up_to_size_six(params):
    for n in indices_up_to(6):
        assert orthogonality_check(params, build_polynomial(params, n), n), n


@pytest.mark.parametrize("params", [JP, ML], ids=["jp", "ml"])
def test_two_paths_match_the_direct_construction(params):
    for n in indices_up_to(8):
        direct = build_polynomial(params, n)
        assert build_via_recurrence(params, n, canonical_path(n)) == direct
        assert build_via_recurrence(params, n, stepline_path(n)) == direct


def test_single_weight_anchors():
    legendre = FamilyParams.jacobi_pineiro([0], 0)
    for n in range(21):
        coeffs = nn_coeffs(legendre, MultiIndex((n,)))
        assert coeffs.b == (Fraction(1, 2),)
        assert coeffs.a == (Fraction(n * n, 4 * (4 * n * n - 1)),)
    zeros = refine(isolate_zeros(build_polynomial(legendre, MultiIndex((2,)))), 1e-14)
    expected = [0.5 - 1 / (2 * 3 ** 0.5), 0.5 + 1 / (2 * 3 ** 0.5)]
    assert np.allclose([float(m) for m in zeros.midpoints], expected, atol=1e-12)
    limits = jp_limit_coeffs([1])
    assert (limits.a_limit, limits.b_limit) == ((Fraction(1, 16),), (Fraction(1, 2),))


def test_symmetric_jacobi_zeros_mirror_about_one_half():
    params = FamilyParams.jacobi_pineiro(["1/2"], "1/2")
    p = build_polynomial(params, MultiIndex((7,)))
    mirrored = p.substitute(-1, 1)
    assert mirrored == -p


@pytest.mark.slow
@pytest.mark.parametrize("kind", ["w", "u", "g"])
@pytest.mark.parametrize("r", [1, 2, 3, 4])
def test_moment_identities(kind, r):
    for m in range(7):
        assert moment(kind, r, m).error < 1e-9


def test_closed_form_anchors():
    for x in np.linspace(0.02, 0.98, 20):
        x = mp.mpf(float(x))
        assert abs(density_v(1, x) - arcsine_density(x)) < 1e-8
        assert abs(density_at("u", 1, 4 * x) - marchenko_pastur_density(4 * x)) < 1e-8
        assert abs(density_v(2, x) - v2_closed(x)) < 1e-8
        x_hat = x * mp.mpf(27) / 4
        assert abs(density_at("u", 2, x_hat) - u2_closed(x_hat)) < 1e-8
        assert abs(density_at("g", 2, x_hat) - g2_closed(x_hat)) < 1e-8


@pytest.mark.slow
@pytest.mark.parametrize("r", [1, 2, 3])
def test_mellin_identities_on_a_grid(r):
    c = as_mpf(c_r(r))
    for fraction in np.linspace(0.03, 0.97, 20):
        y = c * mp.mpf(float(fraction))
        for check in (mellin_check_u, mellin_check_g):
            left, right = check(r, y)
            assert abs(left - right) < 1e-8


@pytest.mark.slow
def test_branch_residual_and_sign_grid():
    r = 2
    for re, im in product(np.linspace(-5, 15, 20), [-3, -1, -0.3, -0.1, -0.01, 0.01, 0.1, 0.3, 1, 3]):
        x_hat = mp.mpc(float(re), im)
        branch = fc_branch(r, x_hat, bits=128)
        with mp.workprec(128):
            scale = max(abs(branch.omega) ** (r + 1), abs(x_hat * branch.omega), 1)
            assert abs(branch.residual(r)) / scale < mp.mpf(10) ** -30
    for re, im in product(np.linspace(-3, 10, 10), np.geomspace(0.01, 10, 10)):
        assert mp.im(stieltjes_w_from_branch(r, mp.mpc(float(re), float(im)))) < 0


def test_boundary_values_from_above():
    r = 3
    for fraction in np.linspace(0.1, 0.9, 9):
        point = phi_point(r, phi_max(r) * mp.mpf(float(fraction)))
        branch = fc_branch(r, mp.mpc(point.x_hat, mp.mpf("1e-8")))
        assert abs(branch.omega - point.boundary_omega()) < 1e-6


@pytest.mark.parametrize("r", [1, 2, 3])
def test_endpoint_exponents(r):
    at_zero = -r / (r + 1)
    for kind in ("v", "w", "u", "g"):
        assert endpoint_exponent(kind, r, "0") == pytest.approx(at_zero, abs=0.02)
    assert endpoint_exponent("v", r, "right") == pytest.approx(-0.5, abs=0.02)
    assert endpoint_exponent("u", r, "right") == pytest.approx(0.5, abs=0.02)


@pytest.mark.slow
@pytest.mark.parametrize("params", [JP, ML], ids=["jp", "ml"])
def test_interlacing_along_the_diagonal_chain(params):
    builder = RecurrenceBuilder(params)
    support = UNIT_INTERVAL if params is JP else HALF_LINE
    path = stepline_path(MultiIndex((12, 12)))
    current = MultiIndex((0, 0)).raised(path[0])
    previous = isolate_zeros(builder.get(current), support)
    for k in path[1:]:
        current = current.raised(k)
        zeros = isolate_zeros(builder.get(current), support)
        assert interlacing_check(previous, zeros), current
        previous = zeros


@pytest.fixture(scope="module")
def jp_run():
    config = ExperimentConfig(family="jp", alpha="0,1/2", beta="0", n=SIZES, points="-1")
    return asyncio.run(run_compare(config))


@pytest.fixture(scope="module")
def ml_run():
    config = ExperimentConfig(family="ml", alpha="0,1/2", n=SIZES, points="-1")
    return asyncio.run(run_compare(config))


def ratio_track(report, k):
    return [next(e.error for e in record.ratio_errors if e.k == k) for record in report.records]


@pytest.mark.slow
def test_jacobi_pineiro_zero_distribution(jp_run):
    assert not jp_run.partial
    ks = [record.ks for record in jp_run.records]
    assert strictly_decreasing(ks)
    assert ks[-1] < JP_KS_BASELINE
    assert all(record.interlacing for record in jp_run.records)


@pytest.mark.slow
def test_multiple_laguerre_zero_distribution(ml_run):
    assert not ml_run.partial
    assert strictly_decreasing([record.ks for record in ml_run.records])


@pytest.mark.slow
def test_meijer_stepline_zero_distribution():
    config = ExperimentConfig(family="meijer", nu="0,1", n=["10", "20", "40"])
    report = asyncio.run(run_compare(config))
    assert not report.partial
    assert strictly_decreasing([record.ks for record in report.records])


@pytest.mark.slow
@pytest.mark.parametrize("k", [0, 1])
def test_ratio_asymptotics(jp_run, ml_run, k):
    assert strictly_decreasing(ratio_track(jp_run, k))
    assert strictly_decreasing(ratio_track(ml_run, k))


@pytest.mark.slow
def test_log_derivative_approaches_the_transform(jp_run):
    errors = [record.log_derivative_error for record in jp_run.records]
    assert strictly_decreasing(errors)
