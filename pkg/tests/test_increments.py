from __future__ import annotations

import math
from fractions import Fraction as F

import mpmath
import numpy as np
import pytest
from scipy import integrate

from corrdiff.increments import (
    LatticeError,
    ModelError,
    StripError,
    conjugate_theta1,
    cumulants_from_moments,
    make_model,
    mgf_eval,
    moments_from_cumulants,
    parse_distribution,
    sample_tilted,
    theta1_series,
)

from helpers import FAMILIES, model


def test_gaussian_basics():
    m = model("gaussian")
    lam = np.array([0.3, 1.7])
    assert np.allclose(mgf_eval(m, 0, 1j * lam), np.exp(-lam**2 / 2), rtol=1e-14)
    assert np.allclose(mgf_eval(m, 1, 1j * lam), 1j * lam * np.exp(-lam**2 / 2), rtol=1e-14)
    assert m.cumulants[3] == 0 and m.cumulants[4] == 0


def test_exponential_cumulants_and_mgf():
    m = model("centered_exponential")
    for n in range(2, 10):
        assert m.cumulants[n] == pytest.approx(math.factorial(n - 1), rel=1e-13)
    for t in (-0.7, 0.2, 0.6):
        # numeric integral of e^{t x} against the density of Z - 1
        ref = integrate.quad(lambda z: math.exp(t * (z - 1) - z), 0, math.inf)[0]
        assert mgf_eval(m, 0, t) == pytest.approx(ref, rel=1e-10)
        assert m.psi(t) == pytest.approx(-t - math.log(1 - t), rel=1e-13, abs=1e-16)


def test_laplace_moments_by_integration():
    m = model("laplace")
    s = math.sqrt(2.0)
    dens = lambda x: s / 2 * math.exp(-s * abs(x))
    for n, want in ((2, 1.0), (3, 0.0), (4, 6.0)):
        got = 2 * integrate.quad(lambda x: x**n * dens(x), 0, math.inf)[0] if n % 2 == 0 else 0.0
        assert got == pytest.approx(want, abs=1e-10)
        assert float(m.moments[n]) == pytest.approx(want, abs=1e-14)


@pytest.mark.parametrize("spec", FAMILIES)
def test_standardized_and_consistent(spec):
    m = model(spec)
    assert m.moments[1] == 0 and m.moments[2] == pytest.approx(1.0, abs=1e-15)
    # the stored tables agree with the Bell relation evaluated at high precision
    with mpmath.workdps(50):
        mu = list(m.exact_moments) if m.exact_moments is not None else m.mp_moments(len(m.moments) - 1)
        kap = cumulants_from_moments([mpmath.mpf(v.numerator) / v.denominator if isinstance(v, F) else v for v in mu])
        for n in range(2, len(m.cumulants)):
            assert float(m.cumulants[n]) == pytest.approx(float(kap[n]), rel=1e-12, abs=1e-12)


def test_bell_relation_exact():
    mu = [F(1), F(0), F(1), F(2), F(9)]
    assert moments_from_cumulants(cumulants_from_moments(mu)) == mu


@pytest.mark.parametrize("spec", FAMILIES)
def test_psi_strictly_convex(spec):
    m = model(spec)
    t = np.linspace(-0.8, 0.8, 33) * min(m.eta, 1.0)
    v = np.array([m.psi(x) for x in t])
    assert np.all(np.diff(v, 2) > 0)


@pytest.mark.parametrize("spec", FAMILIES)
def test_mgf_derivatives_match_finite_differences(spec):
    m = model(spec)
    h = 1e-5
    for z in (0.1 + 0.7j, -0.2 + 2.5j):
        for k in (1, 2, 3):
            fd = (mgf_eval(m, k - 1, z + h) - mgf_eval(m, k - 1, z - h)) / (2 * h)
            assert abs(fd - mgf_eval(m, k, z)) <= 1e-6 * max(1.0, abs(fd))


def test_strip_violation():
    with pytest.raises(StripError):
        mgf_eval(model("centered_exponential"), 0, 1.5 + 0j)


def test_conjugate_points():
    assert conjugate_theta1(model("gaussian"), 0.2) == pytest.approx(0.1, abs=1e-15)
    m = model("centered_exponential")
    for d in (0.05, 0.1, 0.5, 1.0):
        t1 = conjugate_theta1(m, d)
        assert t1 == pytest.approx(1 - d / math.expm1(d), rel=1e-13)
        assert abs(m.psi(t1) - m.psi(t1 - d)) <= 1e-14
    t1 = conjugate_theta1(m, 0.1)
    assert abs(t1 - (0.05 - 0.01 / 12)) < 1e-6


@pytest.mark.parametrize("spec", FAMILIES)
def test_drift_signs(spec):
    m = model(spec)
    for d in (0.05, 0.2, 0.5):
        t1 = conjugate_theta1(m, d)
        assert m.dpsi(t1 - d) < 0 < m.dpsi(t1)


def test_theta1_series_examples():
    g = theta1_series(model("gaussian"), 5)
    assert list(g.coeffs) == pytest.approx([0, 0.5, 0, 0, 0, 0], abs=1e-15)
    e = theta1_series(model("centered_exponential"), 4)
    assert list(e.coeffs) == pytest.approx([0, 0.5, -1 / 12, 0, 1 / 720], abs=1e-15)
    m = model("shifted_gamma:shape=2")
    s = theta1_series(m, 2)
    assert s[2] == pytest.approx(-float(m.cumulants[3]) / 24, rel=1e-12)


@pytest.mark.parametrize("spec", FAMILIES)
def test_theta1_series_convergence_order(spec):
    m = model(spec)
    N = 3
    s = theta1_series(m, N)
    ds = (0.1, 0.05, 0.025)
    err = [abs(conjugate_theta1(m, d) - s(d)) for d in ds]
    if max(err) < 1e-13:  # exact to rounding (symmetric laws)
        return
    slopes = [math.log2(err[i] / err[i + 1]) for i in range(2)]
    assert min(slopes) >= N + 0.5


def test_rejections():
    with pytest.raises(LatticeError):
        make_model("bernoulli")
    with pytest.raises(ModelError):
        make_model("cauchy")
    with pytest.raises(ModelError):
        make_model("shifted_gamma:shape=0.5")
    with pytest.raises(ModelError):
        make_model("gaussian:scale=2")
    assert parse_distribution({"family": "shifted_gamma", "shape": 4}) == ("shifted_gamma", {"shape": 4})


@pytest.mark.parametrize("spec,theta", [("gaussian", 0.3), ("centered_exponential", 0.4), ("laplace", 0.5),
                                        ("centered_uniform", 0.7), ("shifted_gamma:shape=2", 0.3)])
def test_tilted_sampler_mean(spec, theta):
    m = model(spec)
    x = sample_tilted(m, theta, seed=7, n=100_000)
    se = x.std(ddof=1) / math.sqrt(x.size)
    assert abs(x.mean() - m.dpsi(theta)) <= 4 * se


@pytest.mark.parametrize("spec", FAMILIES)
def test_untilted_sampler_is_standardized(spec):
    x = sample_tilted(model(spec), 0.0, seed=3, n=200_000)
    n = x.size
    assert abs(x.mean()) <= 4 * x.std() / math.sqrt(n)
    # SE of the sample variance uses the fourth moment
    m4 = float(model(spec).moments[4])
    assert abs(x.var() - 1.0) <= 4 * math.sqrt((m4 - 1.0) / n)


def test_sampler_deterministic():
    m = model("laplace")
    assert np.array_equal(sample_tilted(m, 0.2, 11, 1000), sample_tilted(m, 0.2, 11, 1000))
