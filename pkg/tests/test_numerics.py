import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose
from scipy import integrate, stats

from bivrbs.exceptions import DomainError, NumericalError
from bivrbs.numerics import (
    QuadratureSpec,
    bvn_cdf,
    bvn_pdf,
    chi2_cdf,
    expect_over_standard_normal,
    real_cubic_roots,
    std_normal_cdf,
    std_normal_pdf,
    std_normal_quantile,
    std_normal_sf,
    wilson_hilferty,
)


def test_normal_pdf_values():
    assert std_normal_pdf(0.0) == pytest.approx(1 / math.sqrt(2 * math.pi), rel=1e-15)
    assert std_normal_pdf(2.0) == pytest.approx(0.0539909665131881, rel=1e-13)


def test_normal_pdf_rejects_nonfinite():
    with pytest.raises(DomainError):
        std_normal_pdf(np.nan)
    with pytest.raises(DomainError):
        std_normal_pdf(np.inf)


def test_normal_cdf_limits_and_symmetry():
    assert std_normal_cdf(-np.inf) == 0.0
    assert std_normal_cdf(np.inf) == 1.0
    z = np.linspace(-8, 8, 41)
    assert_allclose(std_normal_cdf(z) + std_normal_cdf(-z), 1.0, atol=1e-15)


def test_normal_sf_deep_tail_has_no_cancellation():
    # 1 - Phi(10) computed naively would be 0
    assert std_normal_sf(10.0) == pytest.approx(7.61985302416047e-24, rel=1e-12)


def test_quantile_values_and_domain():
    assert std_normal_quantile(0.975) == pytest.approx(1.95996398454005, abs=1e-12)
    assert std_normal_quantile(0.5) == 0.0
    for bad in (0.0, 1.0, -0.1, np.nan):
        with pytest.raises(DomainError):
            std_normal_quantile(bad)


@given(st.floats(min_value=1e-12, max_value=1 - 1e-12))
def test_quantile_inverts_cdf(p):
    assert std_normal_cdf(std_normal_quantile(p)) == pytest.approx(p, rel=1e-9, abs=1e-15)


@pytest.mark.parametrize(
    "h, k, rho, expected",
    [
        (1.0, -0.5, 0.3, 0.28313842024448095),
        (-2.0, -1.5, -0.8, 6.8350671368363973e-10),
        (0.7, 0.2, 0.95, 0.57646929520333705),
        (2.5, 2.5, 0.999, 0.99347774484694336),
        (-1.0, 1.0, -0.99, 0.013651719083462699),
        (-3.0, -3.0, 0.5, 8.1889661832192112e-5),
        (0.3, -0.4, 0.0, 0.21291884169695699),
    ],
)
def test_bvn_cdf_matches_high_precision_values(h, k, rho, expected):
    # reference values: 30-digit quadrature of phi(x) Phi((k - rho x)/sqrt(1 - rho^2))
    assert bvn_cdf(h, k, rho) == pytest.approx(expected, rel=1e-12, abs=1e-16)


def test_bvn_cdf_orthant_closed_form():
    for rho in (-0.9, -0.5, 0.0, 0.5, 0.9, 0.99):
        assert bvn_cdf(0.0, 0.0, rho) == pytest.approx(0.25 + math.asin(rho) / (2 * math.pi), abs=1e-15)


def test_bvn_cdf_independence_and_infinite_limits():
    h = np.linspace(-3, 3, 7)
    assert_allclose(bvn_cdf(h, 0.4, 0.0), std_normal_cdf(h) * std_normal_cdf(0.4), atol=1e-15)
    assert_allclose(bvn_cdf(h, np.inf, 0.7), std_normal_cdf(h), atol=0)
    assert bvn_cdf(-np.inf, 1.0, 0.3) == 0.0


def test_bvn_cdf_against_scipy_multivariate_normal():
    rng = np.random.default_rng(3)
    pts = rng.uniform(-3, 3, size=(20, 2))
    for rho in (-0.7, 0.2, 0.93):
        mvn = stats.multivariate_normal(mean=[0, 0], cov=[[1, rho], [rho, 1]])
        ref = np.array([mvn.cdf(p) for p in pts])
        assert_allclose(bvn_cdf(pts[:, 0], pts[:, 1], rho), ref, atol=1e-6)


@settings(max_examples=60, deadline=None)
@given(
    st.floats(-6, 6),
    st.floats(-6, 6),
    st.floats(-0.999, 0.999),
)
def test_bvn_cdf_symmetry_and_frechet_bounds(h, k, rho):
    v = bvn_cdf(h, k, rho)
    assert v == pytest.approx(bvn_cdf(k, h, rho), abs=1e-14)
    fh, fk = std_normal_cdf(h), std_normal_cdf(k)
    assert max(0.0, fh + fk - 1.0) - 1e-14 <= v <= min(fh, fk) + 1e-14


def test_bvn_cdf_rejects_bad_rho():
    with pytest.raises(DomainError):
        bvn_cdf(0.0, 0.0, 1.0)


def test_bvn_pdf_integrates_to_one():
    val, _ = integrate.dblquad(lambda y, x: bvn_pdf(x, y, 0.6), -9, 9, -9, 9, epsabs=1e-11)
    assert val == pytest.approx(1.0, abs=1e-8)


def test_chi2_cdf_matches_scipy():
    x = np.linspace(0, 30, 31)
    for dof in (1, 2, 5, 29):
        assert_allclose(chi2_cdf(x, dof), stats.chi2.cdf(x, dof), rtol=1e-12, atol=1e-15)
    assert chi2_cdf(2.0, 2) == pytest.approx(1 - math.exp(-1.0), rel=1e-14)


def test_wilson_hilferty_median_near_zero():
    med = stats.chi2.median(2)
    assert abs(wilson_hilferty(med, 2)) < 0.02
    with pytest.raises(DomainError):
        wilson_hilferty(-1.0, 2)


def test_expectation_of_polynomials():
    assert expect_over_standard_normal(lambda z: z**2) == pytest.approx(1.0, abs=1e-12)
    assert expect_over_standard_normal(lambda z: z**4) == pytest.approx(3.0, abs=1e-11)
    assert expect_over_standard_normal(np.cos) == pytest.approx(math.exp(-0.5), abs=1e-12)


def test_truncated_expectation_matches_closed_form():
    # E[Z 1{Z > a}] = phi(a)
    for a in (-2.0, 0.0, 1.3, 4.0):
        assert expect_over_standard_normal(lambda z: z, lower=a) == pytest.approx(std_normal_pdf(a), abs=1e-12)
    assert expect_over_standard_normal(lambda z: np.ones_like(z), lower=-1, upper=1) == pytest.approx(
        std_normal_cdf(1) - std_normal_cdf(-1), abs=1e-12
    )


def test_expectation_flags_nonconvergence():
    # a kink at the origin defeats Gauss-Hermite at this node count
    spec = QuadratureSpec(node_count=16, abs_tol=1e-14, rel_tol=1e-14)
    with pytest.raises(NumericalError) as info:
        expect_over_standard_normal(np.abs, spec)
    assert info.value.residual > 0


def test_quadrature_spec_validation():
    with pytest.raises(DomainError):
        QuadratureSpec(node_count=8)
    with pytest.raises(DomainError):
        QuadratureSpec(abs_tol=0.0)


@settings(max_examples=50)
@given(st.floats(-50, 50), st.floats(-50, 50), st.floats(-50, 50))
def test_real_cubic_roots_agree_with_numpy(b, c, d):
    ours = real_cubic_roots(b, c, d)
    ref = np.roots([1.0, b, c, d])
    real = np.sort(ref[np.abs(ref.imag) < 1e-7 * (1 + np.abs(ref))].real)
    if len(real) == len(ours):
        assert_allclose(ours, real, rtol=1e-6, atol=1e-6)
    for x in ours:
        scale = 1 + abs(x) ** 3 + abs(b) * x * x + abs(c * x) + abs(d)
        assert abs(((x + b) * x + c) * x + d) <= 1e-9 * scale
