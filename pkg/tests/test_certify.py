import numpy as np
import pytest

from pharmonic.certify import (
    ConvexityNotCertifiedError,
    RangeNotCoveredError,
    a2_sign_condition,
    analyze_terms,
    epsilon_bound,
    evaluate_sign,
    scan_sign,
)
from pharmonic.operators import linear_profile, linquad_profile, polynomial_profile, quadratic_profile

# first grid radius certified for h(t) = t on [1, 1e4] at 64 samples/decade (refined 8x)
FIRST_CERTIFIED_LINEAR = 2.414418221256639


@pytest.fixture(scope="module")
def linear(warps, convexity_grid):
    return linear_profile().certify(warps[1], convexity_grid)


def test_requires_certified_profile(canon_solution):
    with pytest.raises(ConvexityNotCertifiedError):
        scan_sign(canon_solution, linear_profile(), 1.0, 1e4)


def test_range_must_be_covered(canon_solution, linear):
    with pytest.raises(RangeNotCoveredError):
        scan_sign(canon_solution, linear, 1.0, 1e5)


def test_certificate_linear(canon_solution, linear):
    cert = scan_sign(canon_solution, linear, 1.0, 1e4)
    assert len(cert.points) > 0
    assert cert.first_negative == pytest.approx(FIRST_CERTIFIED_LINEAR, rel=1e-12)
    lo, hi = cert.sign_changes[0]
    assert lo < FIRST_CERTIFIED_LINEAR <= hi
    for pt in cert.points:
        assert pt.value < 0 and pt.value_decomposition < 0
        assert pt.A1 > 0 and pt.A3 == 0 and pt.A2 < 0
    assert 0 < cert.negative_fraction <= 1
    assert cert.to_dict()["n_certified"] == len(cert.points)


def test_dual_formula_agreement(canon_solution, linear):
    cert = scan_sign(canon_solution, linear, 1.0, 1e4)
    _, _, _, scale = evaluate_sign(canon_solution, linear, cert.radii)
    diff = np.abs([pt.value - pt.value_decomposition for pt in cert.points])
    assert np.all(diff <= 1e-8 * scale)


def test_certificate_linquad(canon_solution, warps, convexity_grid):
    h = linquad_profile().certify(warps[1], convexity_grid)
    cert = scan_sign(canon_solution, h, 1.0, 1e4)
    assert cert.points and cert.points[-1].s > 1e3
    assert all(pt.A3 > 0 for pt in cert.points)


@pytest.mark.parametrize("lam", [0.5, 2.0])
def test_sign_scaling(canon_solution, linear, lam):
    base = scan_sign(canon_solution, linear, 1.0, 1e4)
    scaled = scan_sign(canon_solution, linear.scaled(lam), 1.0, 1e4)
    assert np.array_equal(base.radii, scaled.radii)


@pytest.mark.parametrize("coeffs", [[0, 1], [0, 0, 1], [0, 1, 1], [0, 0.2, 0, 3]])
def test_harmonic_control(harmonic_solution, warps, convexity_grid, coeffs):
    h = polynomial_profile(coeffs).certify(warps[1], convexity_grid)
    cert = scan_sign(harmonic_solution, h, 1.0, 1e4)
    assert cert.points == []
    assert cert.negative_fraction == 0.0


def test_term_slopes(canon_solution, warps, convexity_grid):
    h = quadratic_profile().certify(warps[1], convexity_grid)
    diag = analyze_terms(canon_solution, h, (1e2, 1e4))
    assert abs(diag.fits["A1"].slope + 6.0) <= 0.6
    assert abs(diag.fits["A3"].slope + 9.0) <= 0.9
    assert abs(diag.fits["A2"].rel_deviation) <= 0.1
    assert abs(diag.fits["gfp_over_g"].rel_deviation) <= 0.1
    assert diag.fits["A1"].prefactor == pytest.approx(diag.A1_prefactor_theory, rel=0.15)
    assert diag.A2_sign_constant and diag.A2_dominates


def test_term_window_too_short(canon_solution, linear):
    with pytest.raises(ValueError):
        analyze_terms(canon_solution, linear, (1e3, 5e3))


def test_linear_profile_has_no_A3_fit(canon_solution, linear):
    assert analyze_terms(canon_solution, linear, (1e2, 1e4)).fits["A3"] is None


def test_proof_constants(canon):
    assert epsilon_bound(canon) == pytest.approx(0.2)
    assert a2_sign_condition(canon)
