from __future__ import annotations

import math

import numpy as np
import pytest

from corrdiff.increments import conjugate_theta1
from corrdiff.kernels import assemble_reduced_kernels, log_char_kernel
from corrdiff.quadrature import (
    ContractionError,
    QuadConfig,
    I_direct,
    LineIntegrand,
    QuadratureError,
    integrate_batch,
    integrate_line,
    j0_closed_form_check,
    j0_imag_residue,
    analytic_log_zero_check,
    analytic_zero_check,
    rho_direct,
    rho_direct_ladder_form,
    s_direct,
)

from helpers import FAMILIES, model, rational_kernel

TOL = QuadConfig().tol


def test_lorentz_integrals(lorentz):
    from corrdiff.kernels import T_even

    r = integrate_line(T_even(1, lorentz))
    assert r.value == pytest.approx(-math.pi, abs=1e-11) and r.converged
    h = rational_kernel([0.0, 0.0, -1.0], [1.0, 0.0, -1.0], name="l2")  # lambda^2/(1+lambda^2)
    r = integrate_line(T_even(1, h))
    assert r.value == pytest.approx(math.pi, abs=1e-11)
    assert r.error <= 1e-11


def test_log_growth_needs_tail_model():
    m = model("gaussian")
    with pytest.raises(QuadratureError):
        integrate_line(log_char_kernel(m))


def test_budget_exhaustion_reports_failure():
    it = LineIntegrand(func=lambda lam, cache: np.sin(lam * 400.0) / (1 + lam))
    r = integrate_batch([it], 0.0, QuadConfig(max_panels=50, max_rounds=3))[0]
    assert not r.converged and r.diagnostics


@pytest.mark.parametrize("mnab", [(0, 0, 1.0, 1.0), (1, 2, 0.5, 0.3)])
def test_analytic_kernels_integrate_to_zero(mnab):
    r = analytic_zero_check(*mnab)
    assert r.converged
    assert abs(r.value) <= max(r.error, TOL)


def test_analytic_log_kernel_integrates_to_zero():
    r = analytic_log_zero_check(0.7, 0.4)
    assert abs(r.value) <= 1e-11


@pytest.mark.parametrize("b", [0.1, 0.5, 1.0])
def test_closed_form_j0(b):
    for which in ("odd", "even", "cauchy"):
        got, want = j0_closed_form_check(b, which)
        assert got == pytest.approx(want, abs=1e-11)


@pytest.mark.parametrize("spec", FAMILIES)
def test_imaginary_residue_vanishes(spec):
    m = model(spec)
    for k in [log_char_kernel(m), *assemble_reduced_kernels(m, 3).E.values()]:
        r = j0_imag_residue(k, 0.3)
        assert abs(r.value) <= TOL


def test_exponential_rho_closed_form():
    m = model("centered_exponential")
    for d in (0.1, 0.3):
        t1 = conjugate_theta1(m, d)
        assert rho_direct(m, t1, d).value == pytest.approx(-d, abs=1e-11)
    for t, b in ((0.0, 0.2), (0.3, 0.7)):
        assert rho_direct(m, t, b).value == pytest.approx(math.log((1 - t) / (1 - t + b)), abs=1e-11)


def test_laplace_rho_closed_form():
    m = model("laplace")
    s = math.sqrt(2)
    for t, b in ((0.0, 0.3), (0.2, 0.1), (0.45, 0.9)):
        assert rho_direct(m, t, b).value == pytest.approx(math.log((s - t) / (s - t + b)), abs=1e-11)


@pytest.mark.parametrize("spec", FAMILIES)
def test_rho_properties(spec):
    m = model(spec)
    assert abs(rho_direct(m, 0.1, 1e-4).value) < 1e-3
    vals = [math.exp(rho_direct(m, 0.1, b).value) for b in (0.05, 0.1, 0.3, 0.6, 1.0)]
    assert all(0 < v < 1 for v in vals)
    assert all(a > b for a, b in zip(vals, vals[1:]))
    assert abs(s_direct(m, 1e-5).value) < 1e-4


@pytest.mark.parametrize("spec", FAMILIES)
def test_split_identity(spec):
    m = model(spec)
    r, s, i = rho_direct(m, 0.05, 0.1), s_direct(m, 0.1), I_direct(m, 0.05, 0.1)
    assert abs(r.value - s.value - i.value) <= 2 * QuadConfig().direct_tol


@pytest.mark.parametrize("spec", FAMILIES)
def test_ladder_form_cross_check(spec):
    m = model(spec)
    assert rho_direct_ladder_form(m, 0.2, 0.3).value == pytest.approx(rho_direct(m, 0.2, 0.3).value, abs=1e-11)


def test_gaussian_s_slope():
    m = model("gaussian")
    assert s_direct(m, 0.1).value / 0.1 == pytest.approx(-0.583, abs=0.02)


def test_contraction_sup_grows_toward_strip_edge():
    m = model("centered_exponential")
    from corrdiff.quadrature import contraction_sup

    sups = [contraction_sup(m, t) for t in (0.05, 0.3, 0.6, 0.9)]
    assert all(a < b for a, b in zip(sups, sups[1:]))
    assert sups[0] < 0.1 and sups[-1] < 1.0


def test_contraction_violation_is_reported(monkeypatch):
    import corrdiff.quadrature as q

    monkeypatch.setattr(q, "contraction_sup", lambda model, theta: 1.2)
    with pytest.raises(ContractionError, match="sup"):
        q.I_direct(model("gaussian"), 0.1, 0.1)
    # the guard can be skipped explicitly
    assert q.I_direct(model("gaussian"), 0.1, 0.1, check=False).converged


def test_I_direct_invariant_to_centering():
    # the centering only rescales the analytic factor x + psi, whose J0 vanishes
    m = model("shifted_gamma:shape=2")
    a = I_direct(m, 0.1, 0.2).value
    b = I_direct(m, 0.1, 0.2, uncentered_phi2=True).value
    assert a == pytest.approx(b, abs=1e-11)
    assert abs(rho_direct(m, 0.1, 0.2).value - s_direct(m, 0.2).value - a) <= 1e-11
