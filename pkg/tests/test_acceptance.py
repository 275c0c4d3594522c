"""Acceptance criteria at their stated tolerances; each test logs one PASS/FAIL line."""

from __future__ import annotations

import io
import json
import math
import time

import mpmath as mp
import numpy as np
import pytest
from scipy.integrate import quad

from corrdiff.cli import run
from corrdiff.expansion import (
    beta_series,
    evaluate_mean_max,
    mean_max_series,
    tail_approx,
)
from corrdiff.increments import conjugate_theta1
from corrdiff.kernels import T_even, T_op, assemble_reduced_kernels, log_char_kernel
from corrdiff.mcoracle import crossing_prob_delta, ladder_identity_check, lindley_mean, overshoot_transform, z_stat
from corrdiff.quadrature import (
    QuadConfig,
    I_direct,
    j0_closed_form_check,
    j0_imag_residue,
    analytic_zero_check,
    rho_direct,
    s_direct,
)

from helpers import FAMILIES, SYMMETRIC, beta, model, rational_kernel, record

QTOL = QuadConfig().tol
DTOL = QuadConfig().direct_tol
DELTAS = (0.05, 0.1, 0.2)


def test_ac1_exponential_end_to_end():
    t = time.perf_counter()
    rep = beta_series(model("centered_exponential"), 5)
    dt = time.perf_counter() - t
    ok = abs(rep["r1"] + 1) <= 1e-6 and all(abs(rep[f"r{n}"]) <= 1e-6 for n in range(2, 6)) and dt <= 120
    assert record("AC1", ok, f"r={['%.2e' % v for v in rep.values]} in {dt:.1f}s")


def test_ac2_second_coefficient_vanishes():
    vals = {s: beta(s)["r2"] for s in FAMILIES}
    ok = all(abs(v) <= 1e-6 for v in vals.values())
    assert record("AC2", ok, f"max |r2| = {max(map(abs, vals.values())):.2e}")


def test_ac3_symmetric_even_coefficients():
    worst = max(max(abs(beta(s)["r2"]), abs(beta(s)["r4"])) for s in SYMMETRIC)
    assert record("AC3", worst <= 1e-6, f"max |r2|,|r4| over symmetric laws = {worst:.2e}")


def _beta1_oracle_gaussian() -> float:
    # (1/6) E X^3 - (1/2pi) int lam^-2 Re log(2(1 - g)/lam^2), with E X^3 = 0
    with mp.workdps(40):
        f = lambda t: mp.log(-2 * mp.expm1(-t**2 / 2) / t**2) / t**2
        half = mp.quad(f, mp.linspace(0, 1, 9), method="gauss-legendre") + mp.quad(f, [1, 4, mp.inf])
        return float(-2 * half / (2 * mp.pi))


def test_ac4_gaussian_first_coefficient():
    oracle = _beta1_oracle_gaussian()
    got = -beta("gaussian")["r1"]
    ok = abs(got - oracle) <= 1e-6 and abs(oracle - 0.583) < 1e-3
    assert record("AC4", ok, f"-r1 = {got:.15f}, oracle = {oracle:.15f}")


@pytest.mark.parametrize("spec", FAMILIES)
def test_ac5a_split_identity(spec):
    m = model(spec)
    res = []
    for d in DELTAS:
        t1 = conjugate_theta1(m, d)
        res.append(abs(rho_direct(m, t1, d).value - s_direct(m, d).value - I_direct(m, t1, d).value))
    assert record(f"AC5a[{spec}]", max(res) <= 2 * DTOL, f"max residual = {max(res):.2e}")


@pytest.mark.parametrize("spec", FAMILIES)
def test_ac5b_convergence_order(spec):
    m = model(spec)
    rep = beta(spec, 4)
    gaps, qerr = [], []
    for d in sorted(DELTAS, reverse=True):
        r = rho_direct(m, conjugate_theta1(m, d), d)
        gaps.append(abs(r.value - sum(rep[f"r{n}"] * d**n for n in range(1, 5))))
        qerr.append(r.error)
    floor = 10 * max(max(qerr), 1e-15)
    if max(gaps) <= floor:
        # the order-4 series is exact for this law (r_n = 0 for n >= 2); no order is measurable
        ok = all(abs(rep[f"r{n}"]) <= 1e-12 for n in range(2, 5))
        assert record(f"AC5b[{spec}]", ok, f"series exact: gaps {['%.1e' % g for g in gaps]} below floor {floor:.1e}")
        return
    orders = [math.log2(a / b) for a, b in zip(gaps, gaps[1:])]
    assert record(f"AC5b[{spec}]", min(orders) >= 4.5, f"orders {['%.2f' % o for o in orders]}")


@pytest.mark.parametrize("spec", FAMILIES)
def test_ac5c_overshoot_monte_carlo(spec):
    m = model(spec)
    zs = []
    for i, d in enumerate(DELTAS):
        t1 = conjugate_theta1(m, d)
        e = overshoot_transform(m, t1, d, x=50.0, n=100_000, seed=2024 + i, diagnostic_x=None)
        zs.append(z_stat(e.mean, e.stderr, math.exp(rho_direct(m, t1, d).value)))
    assert record(f"AC5c[{spec}]", max(zs) <= 3.0, f"z = {['%.2f' % z for z in zs]}")


def test_ac6_level_crossing():
    worst = {}
    for spec in ("centered_exponential", "gaussian"):
        m = model(spec)
        rep = beta(spec, 4)
        r5 = abs(beta(spec, 5)["r5"])
        ratios = []
        for i, (d, x) in enumerate([(0.1, 5.0), (0.1, 10.0), (0.2, 5.0), (0.2, 10.0)]):
            e = crossing_prob_delta(m, d, x, n=100_000, seed=100 + i)
            if spec == "centered_exponential":
                target, tol = math.exp(-d * (x + 1)), 3 * e.stderr
            else:
                t = tail_approx(m, x, 4, delta=d, beta=rep)
                target = t["corrected_order_4"]
                tol = max(3 * e.stderr, 5 * target * (t["series_error_bound"] + r5 * d**5))
            ratios.append(abs(e.mean - target) / tol)
        worst[spec] = max(ratios)
    ok = all(v <= 1.0 for v in worst.values())
    assert record("AC6", ok, "worst |gap|/tolerance " + ", ".join(f"{k}={v:.2f}" for k, v in worst.items()))


def test_ac7_mean_maximum():
    d = 0.2
    zs = {}
    for spec in FAMILIES:
        m = model(spec)
        e = lindley_mean(m, conjugate_theta1(m, d) - d, n=10_000, seed=7)
        zs[spec] = z_stat(e.mean, e.stderr, evaluate_mean_max(mean_max_series(m, 4), d))
    # exponential: E M = int_0^inf P(M > x) dx with P(M > x) = e^{-D(x+1)}
    exact = quad(lambda x: math.exp(-d * (x + 1)), 0, np.inf, epsabs=1e-13, epsrel=1e-13)[0]
    rel = abs(evaluate_mean_max(mean_max_series(model("centered_exponential"), 4), d) - exact) / exact
    ok = max(zs.values()) <= 3.0 and rel <= 1e-4
    assert record("AC7", ok, f"max z = {max(zs.values()):.2f}, exponential rel. gap = {rel:.1e}")


def test_ac8_renewal_identity():
    zs = {s: ladder_identity_check(model(s), 0.2, 0.3, n=100_000, seed=8)["z"] for s in ("gaussian", "laplace")}
    assert record("AC8", max(zs.values()) <= 3.0, ", ".join(f"{k} z={v:.2f}" for k, v in zs.items()))


def test_ac9_operator_suite(lorentz):
    grid = np.array([0.3, 0.5, 0.7, 2.0, 10.0])
    worst = {}
    h = rational_kernel([1.0, 0.0, 0.0], [1.0, 0.0, -3.0, 0.0, 2.0], name="r2")
    f = rational_kernel([0.0, 1.0], [2.0, -3.0, 1.0], name="v")
    g = rational_kernel([0.0, 0.0, 1.0], [1.0, 0.5], name="w")
    worst["T"] = max(np.max(np.abs(T_even(a, T_even(b, k))(grid) - T_even(a + b, k)(grid)))
                     for k in (lorentz, h) for a, b in ((1, 1), (1, 2), (2, 1)))
    worst["T~"] = max(np.max(np.abs(T_op(a, T_op(b, f))(grid) - T_op(a + b, f)(grid)))
                      for a, b in ((1, 1), (1, 2), (2, 2)))
    parity = all(k.parity and k.check_parity() for k in (f * g, f + g, f * f * g, T_op(1, f * g)))
    worst["analytic_zero"] = max(abs(analytic_zero_check(*a).value) for a in ((0, 0, 1.0, 1.0), (1, 2, 0.5, 0.3)))
    worst["closed"] = max(abs(a - b) for bb in (0.1, 0.5, 1.0) for w in ("odd", "even", "cauchy")
                          for a, b in [j0_closed_form_check(bb, w)])
    kernels = []
    for s in FAMILIES:
        kernels += [log_char_kernel(model(s)), *assemble_reduced_kernels(model(s), 3).E.values()]
    worst["imag"] = max(abs(j0_imag_residue(k, 0.3).value) for k in kernels)
    ok = (parity and worst["T"] <= 1e-10 and worst["T~"] <= 1e-10 and worst["analytic_zero"] <= QTOL
          and worst["closed"] <= QTOL and worst["imag"] <= QTOL)
    assert record("AC9", ok, f"parity={parity} " + " ".join(f"{k}={v:.1e}" for k, v in worst.items()))


def test_ac10_validate_is_deterministic():
    args = ["validate", "--dist", "laplace", "--delta", "0.1", "--order", "4", "--mc", "100000", "--seed", "42"]
    outs = []
    for _ in range(2):
        buf = io.BytesIO()
        assert run(args, stdout=buf) == 0
        outs.append(buf.getvalue())
    d = json.loads(outs[0])["diagnostics"]
    ok = outs[0] == outs[1] and d["all_z_le_3"] and d["min_convergence_order"] >= 4.5
    assert record("AC10", ok, f"identical={outs[0] == outs[1]} ({len(outs[0])} bytes), "
                              f"min order={d['min_convergence_order']:.2f}, all z<=3: {d['all_z_le_3']}")
