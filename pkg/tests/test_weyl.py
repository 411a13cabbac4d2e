import numpy as np
import pytest
from scipy.integrate import quad

from weylscope.errors import BeyondValidity, DegenerateFit
from weylscope.geometry import HigherDomainSpec
from weylscope.spectra import Spectrum, box_spectrum, disk_spectrum
from weylscope.weyl import (WeylContext, counting_function, dyadic_average,
                            dyadic_windows, exponent_fit,
                            third_term_coefficients, weyl_remainder)


@pytest.fixture(scope="module")
def square_ctx():
    spec = box_spectrum([np.pi, np.pi], 12.0, "dirichlet")
    ctx = WeylContext(dim=2, volume=np.pi ** 2, boundary_volume=4 * np.pi,
                      bc="dirichlet")
    return spec, ctx


def test_square_counting_and_remainder(square_ctx):
    spec, ctx = square_ctx
    assert counting_function(spec, 5.0) == 15
    r = weyl_remainder(spec, ctx, 5.0)
    # independent closed form: 15 - 25 pi / 4 + 5
    assert r == pytest.approx(20 - 25 * np.pi / 4, abs=1e-12)
    assert r == pytest.approx(0.365046, abs=1e-6)


def test_counting_edges(square_ctx):
    spec, _ = square_ctx
    assert counting_function(spec, 1.0) == 0     # below the first eigenvalue
    with pytest.raises(BeyondValidity):
        counting_function(spec, 100.0)


def test_counting_right_continuity(square_ctx):
    spec, _ = square_ctx
    lam0 = spec.lambdas[3]
    mult = spec.multiplicities[3]
    below = counting_function(spec, lam0 * (1 - 1e-12))
    at = counting_function(spec, lam0)
    assert at - below == mult


def test_roundtrip_identity(square_ctx):
    spec, ctx = square_ctx
    lam = np.linspace(0.5, 11.5, 777)
    n = counting_function(spec, lam)
    recon = weyl_remainder(spec, ctx, lam) + ctx.smooth_term(lam)
    assert np.max(np.abs(recon - n)) < 1e-11


def test_dyadic_against_quadrature_oracle(square_ctx):
    spec, ctx = square_ctx
    val = dyadic_average(spec, ctx, 5.0)

    def absR(t):
        return abs(float(counting_function(spec, t)) - ctx.smooth_term(t))

    oracle = 0.0
    edges = [5.0] + [float(l) for l in spec.lambdas
                     if 5.0 < l < 10.0] + [10.0]
    for a, b in zip(edges[:-1], edges[1:]):
        part, _ = quad(absR, a, b, limit=400)
        oracle += part
    assert val == pytest.approx(oracle / 5.0, abs=1e-8)
    assert val >= 0


def test_dyadic_toy_zero_context():
    empty = Spectrum(np.array([]), np.array([], dtype=int), bc="dirichlet",
                     generator="toy", lambda_max=100.0, certificate="exact")
    ctx = WeylContext(dim=2, volume=0.0, boundary_volume=0.0, bc="dirichlet")
    assert dyadic_average(empty, ctx, 3.0) == 0.0


def test_dyadic_validity(square_ctx):
    spec, ctx = square_ctx
    with pytest.raises(BeyondValidity):
        dyadic_average(spec, ctx, 7.0)   # needs data up to 14


def test_disk_scaling_covariance():
    ctx1 = WeylContext(dim=2, volume=np.pi, boundary_volume=2 * np.pi,
                       bc="dirichlet")
    s1 = disk_spectrum(1.0, 40.0, "dirichlet")
    for R in (0.5, 2.0):
        ctxR = WeylContext(dim=2, volume=np.pi * R * R,
                           boundary_volume=2 * np.pi * R, bc="dirichlet")
        sR = disk_spectrum(R, 40.0 / R, "dirichlet")
        for lam in (5.0, 11.0, 17.0):
            a = weyl_remainder(sR, ctxR, lam / R)
            b = weyl_remainder(s1, ctx1, lam)
            assert a == pytest.approx(b, abs=1e-9)


def test_exponent_fit_planted():
    lams = [40, 60, 90, 135, 200, 300]
    fit = exponent_fit([(l, l ** 0.5) for l in lams])
    assert fit.alpha == pytest.approx(0.5, abs=1e-12)
    assert fit.half_width == pytest.approx(0.0, abs=1e-10)
    fit2 = exponent_fit([(l, 3 * l ** 1.5) for l in lams])
    assert fit2.alpha == pytest.approx(1.5, abs=1e-12)
    assert fit2.intercept == pytest.approx(np.log(3), abs=1e-12)


def test_exponent_fit_guards():
    with pytest.raises(ValueError):
        exponent_fit([(1, 1), (2, 2)])
    with pytest.raises(DegenerateFit):
        exponent_fit([(1, 1), (2, 2), (3, 3), (4, 0.0), (5, 5)])


def test_dyadic_windows_ratio():
    wins = dyadic_windows(14.0, 150.0)
    assert wins[-1] == pytest.approx(75.0)
    ratios = np.diff(np.log(wins))
    assert np.allclose(ratios, np.log(1.5), atol=1e-12)
    assert len(wins) >= 5


def test_third_term_reports():
    ball = HigherDomainSpec(kind="ball", dim=3, radius=2.0)
    rep = third_term_coefficients(ball)
    assert rep.mean_curvature_integral == pytest.approx(8 * np.pi)
    assert rep.scalar_curvature_integral == 0.0
    assert rep.predicted_order == 1
    assert not rep.polyhedron_flag
    assert rep.coefficient_nonzero

    box = HigherDomainSpec(kind="box", dim=3, sides=(np.pi,) * 3)
    rep2 = third_term_coefficients(box)
    assert rep2.polyhedron_flag
    assert rep2.predicted_order == 1
    assert rep2.mean_curvature_integral is None
