from __future__ import annotations

import math

import mpmath as mp
import numpy as np
import pytest

from corrdiff.expansion import (
    ExpansionConfig,
    ExpansionReport,
    beta_series,
    delta_max,
    evaluate_mean_max,
    evaluate_series,
    j0_derivatives,
    k_derivatives,
    kappa_table,
    ladder_series,
    mean_max_series,
    rho_biseries,
    s2_two_term,
    s_series,
    tail_approx,
)
from corrdiff.increments import conjugate_theta1
from corrdiff.quadrature import rho_direct

from helpers import FAMILIES, SYMMETRIC, beta, model, rational_kernel

SQ2 = math.sqrt(2.0)


def _gaussian_s1_oracle() -> float:
    # (1/2pi) * int_R log(2(1 - e^{-l^2/2})/l^2)/l^2 dl, done in high precision
    with mp.workdps(40):
        f = lambda t: mp.log(-2 * mp.expm1(-t**2 / 2) / t**2) / t**2
        a = mp.quad(f, mp.linspace(0, 1, 9), method="gauss-legendre")
        b = mp.quad(f, [1, 4, mp.inf])
        return float(2 * (a + b) / (2 * mp.pi))


def _gamma2_s2_oracle() -> float:
    # [b^2] s(b) = (mu4/12 - mu3^2/18)/2 - (1/2pi) int_R (Im log(1 - g)/lambda - mu3/3)/lambda^2
    # for g(l) = e^{-i sqrt2 l}/(1 - i l/sqrt2)^2, the standardized shape-2 gamma
    mu3, mu4 = SQ2, 6.0
    with mp.workdps(40):
        s = mp.sqrt(2)

        def f(l):
            g = mp.exp(-1j * s * l) / (1 - 1j * l / s) ** 2
            return (mp.im(mp.log(1 - g)) / l - mu3 / 3) / l**2

        val = 2 * (mp.quad(f, mp.linspace(0, 2, 9), method="gauss-legendre") + mp.quad(f, [2, 10, 100, mp.inf]))
        return float((mu4 / 12 - mu3**2 / 18) / 2 - val / (2 * mp.pi))


# -- short-time derivatives --------------------------------------------------


def test_k_derivatives_rational():
    h = rational_kernel([0.0, 0.0, -1.0], [1.0, 0.0, -1.0], name="l2")  # lambda^2/(1+lambda^2)
    k, e = k_derivatives(h, 3)
    assert k[0] == pytest.approx(0.0, abs=1e-14)
    assert k[1] == pytest.approx(0.5, abs=1e-11)
    assert k[2] == pytest.approx(-1.0, abs=1e-11)  # 2! c_2 / 2 with c_2 = -1
    assert all(x <= 1e-10 for x in e)


def test_j0_derivatives_odd_rational():
    f = rational_kernel([0.0, 1.0], [1.0, 0.0, -1.0], name="odd")  # i lambda/(1+lambda^2)
    d, e = j0_derivatives(f, 2)
    assert d == pytest.approx([0.0, -0.5, 1.0], abs=1e-11)
    assert max(e) <= 1e-10


def test_j0_derivatives_needs_parity():
    from corrdiff.kernels import Kernel

    k = Kernel(np.array([0, 1j, 0]), lambda lam, cache: -np.asarray(lam) * 1.0, switch=0.5, name="bad")
    with pytest.raises(ValueError, match="parity"):
        j0_derivatives(k, 2)


# -- s(b) ----------------------------------------------------------------------


def test_s_series_closed_forms():
    s, e = s_series(model("centered_exponential"), 4)
    assert list(s.coeffs) == pytest.approx([0.0, -1.0, 0.5, -1 / 3, 0.25], abs=1e-11)
    s, e = s_series(model("laplace"), 4)
    want = [0.0] + [(-1) ** (p + 1) / p / SQ2**p * -1 for p in range(1, 5)]
    assert list(s.coeffs) == pytest.approx(want, abs=1e-11)


def test_s_series_gaussian_slope():
    s, _ = s_series(model("gaussian"), 2)
    assert s[1] == pytest.approx(_gaussian_s1_oracle(), abs=1e-12)
    assert s[1] == pytest.approx(-0.583, abs=1e-3)


def test_s2_against_independent_oracle():
    s, e = s_series(model("shifted_gamma:shape=2"), 2)
    assert s[2] == pytest.approx(_gamma2_s2_oracle(), abs=1e-8)


def test_two_term_s2_disagrees_with_exact_value():
    # exact Laplace s(b) = log(sqrt2/(sqrt2 + b)) has [b^2] = 1/4
    s, _ = s_series(model("laplace"), 2)
    assert s[2] == pytest.approx(0.25, abs=1e-12)
    assert s2_two_term(model("laplace")) == pytest.approx(-0.5, abs=1e-8)
    with pytest.raises(ValueError):
        s2_two_term(model("shifted_gamma:shape=2"))


# -- bivariate table -----------------------------------------------------------


@pytest.mark.parametrize("spec,scale", [("centered_exponential", 1.0), ("laplace", 1 / SQ2)])
def test_rho_biseries_closed_form(spec, scale):
    # rho = -log(1 + b/(a - theta)) gives [theta^n b^p] = (-1)^p/p C(n+p-1, n) a^-(n+p)
    R, Rerr, diags = rho_biseries(model(spec), 3, 3)
    assert R[0, 0] == 0
    for n in range(4):
        for p in range(1, 4):
            want = (-1) ** p / p * math.comb(n + p - 1, n) * scale ** (n + p)
            assert R[n, p] == pytest.approx(want, abs=1e-10), (n, p)
    assert diags["max_imag_residue"] <= 1e-12


@pytest.mark.parametrize("spec", FAMILIES)
def test_rho_biseries_matches_direct(spec):
    m = model(spec)
    R, _, _ = rho_biseries(m, 4, 4)
    t, b = 0.02, 0.03
    approx = sum(R[n, p] * t**n * b**p for n in range(5) for p in range(1, 5))
    assert approx == pytest.approx(rho_direct(m, t, b).value, abs=1e-8)


# -- beta ----------------------------------------------------------------------


@pytest.mark.parametrize("spec", FAMILIES)
def test_beta_even_coefficients_vanish(spec):
    rep = beta(spec)
    assert abs(rep["r2"]) <= 1e-6 and abs(rep["r4"]) <= 1e-6
    assert rep.diagnostics["beta1"] == -rep["r1"]


def test_beta_exponential_exact():
    rep = beta("centered_exponential")
    assert rep.values == pytest.approx([-1.0, 0, 0, 0, 0], abs=1e-12)


def test_beta_laplace_exact():
    rep = beta("laplace")
    for n in (1, 3, 5):
        assert rep[f"r{n}"] == pytest.approx(-2 * (1 / (2 * SQ2)) ** n / n, abs=1e-12)


def test_beta_gaussian_oracle():
    rep = beta("gaussian")
    assert rep["r1"] == pytest.approx(_gaussian_s1_oracle(), abs=1e-12)
    assert rep.error("r1") <= 1e-10


@pytest.mark.parametrize("spec", ["gaussian", "laplace", "shifted_gamma:shape=2"])
def test_beta_series_order_against_direct(spec):
    m = model(spec)
    rep = beta(spec, 4)
    errs = []
    for d in (0.4, 0.2, 0.1):
        t1 = conjugate_theta1(m, d)
        direct = rho_direct(m, t1, d).value
        errs.append(abs(direct - sum(rep[f"r{n}"] * d**n for n in range(1, 5))))
    orders = [math.log2(a / b) for a, b in zip(errs, errs[1:])]
    assert min(orders) >= 4.5, (errs, orders)


def test_alternative_derivative_rule_breaks_closed_form():
    rep = beta_series(model("laplace"), 5, ExpansionConfig(closed_form_derivatives=True))
    assert abs(rep["r2"]) > 0.1


def test_closed_form_kernels_agree():
    a = beta("shifted_gamma:shape=2")
    b = beta_series(model("shifted_gamma:shape=2"), 5, ExpansionConfig(closed_form_kernels=True))
    assert b.values == pytest.approx(a.values, abs=1e-12)


# -- cumulants -------------------------------------------------------------------


def test_kappa_exponential_closed_form():
    # R(inf) ~ Exp(1 - theta): kappa_n = (n-1)!/(1-theta)^n
    tab = kappa_table(model("centered_exponential"), 3, 3)
    for n in range(1, 4):
        for j in range(4):
            want = math.factorial(n - 1) * math.prod(range(n, n + j))
            assert tab[n, j] == pytest.approx(want, abs=1e-9)


@pytest.mark.parametrize("spec", FAMILIES)
def test_kappa_consistency(spec):
    m = model(spec)
    tab = kappa_table(m, 3, 3)
    s, _ = s_series(m, 1)
    assert tab[1, 0] == pytest.approx(-s[1], abs=1e-12)
    assert tab[1, 0] > 0 and tab[2, 0] > 0
    # kappa_1(theta) = -d/db rho(theta, 0), by a second-order one-sided difference
    t, h = 0.05, 1e-3
    fd = -(4 * rho_direct(m, t, h).value - rho_direct(m, t, 2 * h).value) / (2 * h)
    assert tab.kappa(1, t) == pytest.approx(fd, abs=2e-5)


# -- mean maximum --------------------------------------------------------------


def test_mean_max_exponential():
    rep = mean_max_series(model("centered_exponential"), 4)
    assert rep["inv_delta"] == 1.0
    # E M = e^{-D}/D
    want = [(-1) ** (n + 1) / math.factorial(n + 1) for n in range(5)]
    assert [rep[f"c{n}"] for n in range(5)] == pytest.approx(want, abs=1e-10)
    assert evaluate_mean_max(rep, 0.1) == pytest.approx(math.exp(-0.1) / 0.1, abs=1e-4)


@pytest.mark.parametrize("spec", FAMILIES)
def test_mean_max_constant_term(spec):
    rep = mean_max_series(model(spec), 2)
    tab = kappa_table(model(spec), 1, 0)
    assert rep["c0"] == pytest.approx(-tab[1, 0], abs=1e-12)


# -- ladder heights ------------------------------------------------------------


def test_ladder_rejects_asymmetric():
    with pytest.raises(ValueError, match="symmetric"):
        ladder_series(model("shifted_gamma:shape=2"))


def test_ladder_laplace_exact():
    # ladder height ~ Exp(sqrt2 - theta)
    rep = ladder_series(model("laplace"), 5, beta=beta("laplace"))
    assert rep.values == pytest.approx([SQ2 ** -(n + 1) for n in range(6)], abs=1e-11)
    assert evaluate_series(rep, 0.1, "l") == pytest.approx(1 / (SQ2 - 0.1), abs=1e-6)


@pytest.mark.parametrize("spec", SYMMETRIC)
def test_ladder_leading_term(spec):
    rep = ladder_series(model(spec), 3, beta=beta(spec))
    assert rep["l0"] == pytest.approx(1 / SQ2, abs=1e-14)


# -- tail approximation ----------------------------------------------------------


def test_tail_exponential_exact():
    for d in (0.1, 0.3):
        out = tail_approx(model("centered_exponential"), 5.0, 4, delta=d, beta=beta("centered_exponential", 4))
        assert out["corrected_order_4"] == pytest.approx(math.exp(-d * 6.0), rel=1e-5)


def test_tail_gaussian_first_order():
    m = model("gaussian")
    rep = beta("gaussian", 4)
    out = tail_approx(m, 3.0, 4, theta0=-0.1, beta=rep)
    d = out["delta"]
    assert d == pytest.approx(0.2, abs=1e-14)  # symmetric: theta1 = -theta0
    assert out["corrected_order_1"] == pytest.approx(math.exp(-d * 3.0 + rep["r1"] * d), rel=1e-14)
    assert out["diffusion"] == pytest.approx(math.exp(-2 * 0.1 * 3.0), rel=1e-12)


def test_tail_rejects_bad_input():
    m = model("gaussian")
    with pytest.raises(ValueError):
        tail_approx(m, 1.0, delta=0.0)
    with pytest.raises(ValueError):
        tail_approx(m, 1.0, delta=0.1, mu=0.1)
    with pytest.raises(ValueError):
        tail_approx(m, -1.0, delta=0.1)


def test_tail_warns_beyond_radius():
    out = tail_approx(model("gaussian"), 1.0, 4, delta=0.5, beta=beta("gaussian", 4), dmax=0.3)
    assert out["warnings"]


@pytest.mark.parametrize("spec", FAMILIES)
def test_delta_max_covers_grid(spec):
    assert delta_max(model(spec)) == 1.0


def test_delta_max_stops_at_first_failure(monkeypatch):
    import corrdiff.expansion as ex

    monkeypatch.setattr(ex, "contraction_sup", lambda m, t: 2.0 if t > 0.15 else 0.5)
    # gaussian theta1 = D/2, so D = 0.4 is the first failure
    assert ex.delta_max(model("gaussian")) == 0.3


# -- reports ---------------------------------------------------------------------


def test_report_shape_and_validation():
    d = beta("gaussian").as_dict()
    assert [c["name"] for c in d["coefficients"]] == ["r1", "r2", "r3", "r4", "r5"]
    assert set(d) == {"coefficients", "error_bounds", "config", "diagnostics"}
    with pytest.raises(ValueError):
        ExpansionReport("x", "m", 1, ["a"], [1.0], [])
    with pytest.raises(ValueError):
        ExpansionReport("x", "m", 1, ["a"], [1.0], [math.inf])
