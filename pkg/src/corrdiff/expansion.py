"""Series expansions of the overshoot transform and everything built on it.

Pipeline: kernels -> short-time derivatives of ``J0(b, f)`` at ``b = 0`` ->
bivariate table of ``rho(theta, b)`` -> substitution ``theta = theta1(D)``,
``b = D`` -> coefficients ``r_n`` of ``r(D) = log E exp(-D R(inf))``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .increments import (
    IncrementModel,
    StripError,
    conjugate_theta0,
    conjugate_theta1,
    theta0_for_drift,
    theta1_series,
)
from .kernels import (
    Kernel,
    KernelConfig,
    assemble_reduced_kernels,
    log_char_kernel,
    closed_form_reduced_kernels,
)
from .pseries import BiSeries, Series
from .quadrature import QuadConfig, QuadratureError, contraction_sup, integrate_T

__all__ = [
    "CumulantTable",
    "ExpansionConfig",
    "ExpansionReport",
    "alpha_coefficients",
    "beta_series",
    "delta_max",
    "evaluate_mean_max",
    "evaluate_series",
    "j0_derivatives",
    "k_derivatives",
    "kappa_table",
    "ladder_series",
    "mean_max_series",
    "resolve_drift",
    "rho_biseries",
    "s2_two_term",
    "s_series",
    "tail_approx",
]


@dataclass(frozen=True)
class ExpansionConfig:
    kernel: KernelConfig = field(default_factory=KernelConfig)
    quad: QuadConfig = field(default_factory=QuadConfig)
    closed_form_derivatives: bool = False
    closed_form_kernels: bool = False

    def echo(self) -> dict:
        return {
            "switch_radius": self.kernel.switch,
            "taylor_order": self.kernel.taylor_order,
            "quad_tol": self.quad.tol,
            "quad_rtol": self.quad.rtol,
            "direct_tol": self.quad.direct_tol,
            "Lambda": self.quad.Lambda,
            "closed_form_derivatives": self.closed_form_derivatives,
            "closed_form_kernels": self.closed_form_kernels,
        }


@dataclass
class ExpansionReport:
    """Named coefficients with first-order error bounds and an audit trail."""

    kind: str
    model: str
    order: int
    names: list[str]
    values: list[float]
    errors: list[float]
    config: dict[str, Any] = field(default_factory=dict)
    diagnostics: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        if not len(self.names) == len(self.values) == len(self.errors):
            raise ValueError("names, values and errors must have equal length")
        if not all(math.isfinite(e) for e in self.errors):
            raise ValueError("error bounds must be finite")

    def __getitem__(self, name: str) -> float:
        return self.values[self.names.index(name)]

    def error(self, name: str) -> float:
        return self.errors[self.names.index(name)]

    def as_dict(self) -> dict:
        return {
            "coefficients": [{"name": n, "value": v} for n, v in zip(self.names, self.values)],
            "error_bounds": [{"name": n, "bound": e} for n, e in zip(self.names, self.errors)],
            "config": {"kind": self.kind, "model": self.model, "order": self.order, **self.config},
            "diagnostics": dict(self.diagnostics),
        }


@dataclass
class CumulantTable:
    """``kappa_n^{(j)}(0)``: ``j``-th theta-derivative at 0 of the ``n``-th overshoot cumulant."""

    model: str
    values: dict
    errors: dict
    n_max: int
    j_max: int

    def __getitem__(self, nj):
        return self.values[nj]

    def kappa(self, n: int, theta: float) -> float:
        """Truncated Taylor evaluation of ``kappa_n(theta)``."""
        return sum(self.values[(n, j)] * theta**j / math.factorial(j) for j in range(self.j_max + 1))


# -- short-time derivatives -------------------------------------------------


def k_derivatives(h: Kernel, N: int, cfg: QuadConfig | None = None):
    """``K^{(n)}(0, h)`` for ``n = 0..N`` and their error bounds (``h`` even, real)."""
    vals, errs = _k_derivs_batch([h], [N], cfg)
    return vals[0], errs[0]


def _k_from(h: Kernel, N: int, ints: dict):
    c = h.taylor.real
    vals, errs = [], []
    for n in range(N + 1):
        if n % 2 == 0:
            j = n // 2
            vals.append(math.factorial(n) * c[n] / 2.0)
            errs.append(0.0)
        else:
            j = (n - 1) // 2
            r = ints[j + 1]
            f = (-1) ** j * math.factorial(n) / (2.0 * math.pi)
            vals.append(f * r.value)
            errs.append(abs(f) * r.error)
    return vals, errs


def _k_derivs_batch(hs, Ns, cfg):
    cfg = cfg or QuadConfig()
    pairs = [(i, q) for i, (h, N) in enumerate(zip(hs, Ns)) for q in range(1, (N + 1) // 2 + 1)]
    res = integrate_T([hs[i] for i, _ in pairs], [q for _, q in pairs], cfg)
    _check(res)
    ints: list[dict] = [dict() for _ in hs]
    for (i, q), r in zip(pairs, res):
        ints[i][q] = r
    out_v, out_e = [], []
    for h, N, d in zip(hs, Ns, ints):
        v, e = _k_from(h, N, d)
        out_v.append(v)
        out_e.append(e)
    return out_v, out_e


def _check(results):
    bad = [r for r in results if not r.converged]
    if bad:
        raise QuadratureError("; ".join(sorted(set(d for r in bad for d in r.diagnostics))) or "quadrature failed")


def _j0_from(kre, ere, kim, eim, N):
    vals, errs = [], []
    for n in range(N + 1):
        if n == 0:
            vals.append(kre[0])
            errs.append(ere[0])
            continue
        vals.append(kre[n] - n * kim[n - 1])
        errs.append(ere[n] + n * eim[n - 1])
    return vals, errs


def _closed_form_j0(re_k: Kernel, im_k: Kernel, N: int, cfg: QuadConfig):
    """Alternative derivative rule: even ``n`` uses ``f_RE^{(n)}(0)`` and ``T_{n/2+1} f_IM``;
    odd ``n`` uses ``f_IM^{(n+1)}(0)/(n+1)`` and ``T_{(n+1)/2} f_RE``."""
    items_h, items_q, tags = [], [], []
    for n in range(1, N + 1):
        if n % 2 == 0:
            items_h.append(im_k)
            items_q.append(n // 2 + 1)
        else:
            items_h.append(re_k)
            items_q.append((n + 1) // 2)
        tags.append(n)
    res = integrate_T(items_h, items_q, cfg)
    cre, cim = re_k.taylor.real, im_k.taylor.real
    vals, errs = [0.0], [0.0]
    for n, r in zip(tags, res):
        fac = math.factorial(n) / (2 * math.pi)
        if n % 2 == 0:
            dre = math.factorial(n) * (-1) ** (n // 2) * cre[n]  # f_RE^{(n)}(0)
            vals.append((-1) ** (n // 2) * (dre - fac * r.value))
            errs.append(fac * r.error)
        else:
            m = n + 1
            dim = math.factorial(m) * (-1) ** (m // 2) * (cim[m] if m < len(cim) else 0.0)
            vals.append((-1) ** ((n + 1) // 2) * (dim / m - fac * r.value))
            errs.append(fac * r.error)
    return vals, errs


def alpha_coefficients(kernels: dict, pmax: dict, cfg: ExpansionConfig | None = None):
    """``alpha_p(f) = J0^{(p)}(0, f)/p!`` for each kernel (``p = 0..pmax[key]``).

    All line integrals of the batch share one adaptive panel set.
    """
    cfg = cfg or ExpansionConfig()
    keys = list(kernels)
    hs, Ns = [], []
    for k in keys:
        f = kernels[k]
        P = pmax[k]
        hs.append(f.re_part())
        Ns.append(P)
        hs.append(f.im_over_lambda())
        Ns.append(max(P - 1, 0))
    vals, errs = _k_derivs_batch(hs, Ns, cfg.quad)
    out = {}
    for i, k in enumerate(keys):
        P = pmax[k]
        kre, ere = vals[2 * i], errs[2 * i]
        kim, eim = vals[2 * i + 1], errs[2 * i + 1]
        if cfg.closed_form_derivatives:
            jv, je = _closed_form_j0(hs[2 * i], hs[2 * i + 1], P, cfg.quad)
        else:
            jv, je = _j0_from(kre, ere, kim, eim, P)
        out[k] = ([v / math.factorial(p) for p, v in enumerate(jv)], [e / math.factorial(p) for p, e in enumerate(je)])
    return out


def j0_derivatives(f: Kernel, N: int, cfg: ExpansionConfig | None = None):
    """``J0^{(n)}(0, f)`` for ``n = 0..N`` with error bounds (``f`` in the parity class, vanishing at 0)."""
    cfg = cfg or ExpansionConfig()
    if not f.parity:
        raise ValueError("kernel lacks the parity property")
    a, e = alpha_coefficients({0: f}, {0: N}, cfg)[0]
    return [v * math.factorial(p) for p, v in enumerate(a)], [x * math.factorial(p) for p, x in enumerate(e)]


# -- the bivariate table -----------------------------------------------------


def _series_pow(c: list[float], j: int, n: int) -> list[float]:
    s = Series(c[: n + 1], order=n, mode="float")
    return list((s**j).coeffs) if j > 0 else [1.0] + [0.0] * n


def s_series(model: IncrementModel, N: int, cfg: ExpansionConfig | None = None):
    """Taylor coefficients ``s_0..s_N`` of ``s(b) = rho(0, b)`` and their error bounds."""
    cfg = cfg or ExpansionConfig()
    L = log_char_kernel(model, cfg.kernel)
    a, e = alpha_coefficients({"L": L}, {"L": N}, cfg)["L"]
    a[0] = 0.0
    return Series(a, label="b", mode="float"), e


def rho_biseries(
    model: IncrementModel,
    n_theta: int,
    n_b: int,
    cfg: ExpansionConfig | None = None,
    *,
    total: int | None = None,
):
    """Coefficients ``[theta^n b^p] rho`` for ``n <= n_theta``, ``p <= n_b``.

    With ``total`` given only entries with ``n + p <= total`` are computed
    (the rest are left at 0).  Returns ``(values, errors, diagnostics)``.
    """
    cfg = cfg or ExpansionConfig()
    if n_theta < 0 or n_b < 1:
        raise ValueError("orders must be n_theta >= 0, n_b >= 1")

    def pcap(n):
        return n_b if total is None else min(n_b, total - n)

    kernels: dict = {"L": log_char_kernel(model, cfg.kernel)}
    pmax: dict = {"L": pcap(0)}
    chi: list[float] = []
    if n_theta >= 1:
        red = assemble_reduced_kernels(model, n_theta, cfg.kernel)
        E = closed_form_reduced_kernels(model, n_theta, cfg.kernel) if cfg.closed_form_kernels else red.E
        chi = red.chi
        for (j, M), k in E.items():
            if pcap(M) >= 1:
                kernels[(j, M)] = k
                pmax[(j, M)] = pcap(M)
    alphas = alpha_coefficients(kernels, pmax, cfg)
    R = BiSeries.zeros(n_theta, n_b)
    Rerr = BiSeries.zeros(n_theta, n_b)
    a0, e0 = alphas["L"]
    for p in range(1, pcap(0) + 1):
        R[0, p] = a0[p]
        Rerr[0, p] = e0[p]
    chi_pows = [_series_pow(chi, j, n_theta) for j in range(n_theta)] if n_theta >= 1 else []
    imag = 0.0
    for n in range(1, n_theta + 1):
        for p in range(1, pcap(n) + 1):
            v = e = 0.0
            for M in range(1, n + 1):
                for j in range(M):
                    key = (j, M)
                    if key not in alphas:
                        continue
                    w = chi_pows[j][n - M]
                    v += w * alphas[key][0][p]
                    e += abs(w) * alphas[key][1][p]
            R[n, p] = v
            Rerr[n, p] = e
    for k in kernels.values():
        imag = max(imag, float(np.max(np.abs(k.taylor.imag))))
    diags = {
        "kernels": len(kernels),
        "max_seam_error": max(k.seam_error() for k in kernels.values()),
        "max_imag_residue": imag,
    }
    return R, Rerr, diags


def _subst(R: BiSeries, Rerr: BiSeries, th: Series, N: int):
    d = Series.variable(N, label="delta", mode="float")
    th = Series([float(c) for c in th.coeffs[: N + 1]], order=N, label="delta", mode="float")
    val = R.substitute(th, d)
    th_abs = Series([abs(c) for c in th.coeffs], order=N, label="delta", mode="float")
    err = Rerr.substitute(th_abs, d)
    return list(val.coeffs), list(err.coeffs)


def beta_series(model: IncrementModel, N: int = 5, cfg: ExpansionConfig | None = None) -> ExpansionReport:
    """Coefficients ``r_1..r_N`` of ``r(D) = rho(theta1(D), D)``."""
    cfg = cfg or ExpansionConfig()
    if N < 1:
        raise ValueError("order must be >= 1")
    R, Rerr, diags = rho_biseries(model, N - 1, N, cfg, total=N)
    th = theta1_series(model, N)
    r, re = _subst(R, Rerr, th, N)
    names = [f"r{n}" for n in range(1, N + 1)]
    diags = dict(diags)
    diags["beta1"] = -r[1]
    diags["theta1_series"] = [float(c) for c in th.coeffs]
    return ExpansionReport(
        kind="beta",
        model=model.spec,
        order=N,
        names=names,
        values=[float(v) for v in r[1:]],
        errors=[float(v) for v in re[1:]],
        config={**cfg.echo()},
        diagnostics=diags,
    )


def kappa_table(model: IncrementModel, n_max: int = 3, j_max: int = 3, cfg: ExpansionConfig | None = None) -> CumulantTable:
    """``kappa_n^{(j)}(0) = (-1)^n n! j! [theta^j b^n] rho``."""
    cfg = cfg or ExpansionConfig()
    R, Rerr, _ = rho_biseries(model, j_max, n_max, cfg)
    vals, errs = {}, {}
    for n in range(1, n_max + 1):
        for j in range(j_max + 1):
            f = (-1) ** n * math.factorial(n) * math.factorial(j)
            vals[(n, j)] = f * R[j, n]
            errs[(n, j)] = abs(f) * Rerr[j, n]
    return CumulantTable(model=model.spec, values=vals, errors=errs, n_max=n_max, j_max=j_max)


def mean_max_series(model: IncrementModel, N: int = 4, cfg: ExpansionConfig | None = None) -> ExpansionReport:
    """``E M = 1/D + c_0 + c_1 D + ... + c_N D^N`` with ``c`` from ``d/db rho(theta1(D), D)``."""
    cfg = cfg or ExpansionConfig()
    if N < 0:
        raise ValueError("order must be >= 0")
    R, Rerr, diags = rho_biseries(model, N, N + 1, cfg, total=N + 1)
    dR, dE = R.partial_b(), Rerr.partial_b()
    th = theta1_series(model, max(N, 1))
    dR = BiSeries([r[: N + 1] for r in dR.rows()[: N + 1]])
    dE = BiSeries([r[: N + 1] for r in dE.rows()[: N + 1]])
    M = max(N, 1)
    d = Series.variable(M, label="delta", mode="float")
    thf = Series([float(c) for c in th.coeffs], order=M, label="delta", mode="float")
    c = list(dR.substitute(thf, d).coeffs)[: N + 1]
    ce = list(dE.substitute(Series([abs(v) for v in thf.coeffs], order=M, label="delta", mode="float"), d).coeffs)[: N + 1]
    names = ["inv_delta"] + [f"c{n}" for n in range(N + 1)]
    return ExpansionReport(
        kind="mean_max",
        model=model.spec,
        order=N,
        names=names,
        values=[1.0] + [float(v) for v in c],
        errors=[0.0] + [float(v) for v in ce],
        config={**cfg.echo()},
        diagnostics=diags,
    )


def evaluate_mean_max(report: ExpansionReport, delta: float) -> float:
    return 1.0 / delta + sum(report[f"c{n}"] * delta**n for n in range(report.order + 1))


def ladder_series(model: IncrementModel, N: int = 5, cfg: ExpansionConfig | None = None,
                  beta: ExpansionReport | None = None) -> ExpansionReport:
    """Series in ``theta1`` of ``E_{theta1} S_{tau+}`` for symmetric increments.

    ``E S = sqrt(psi'(t)/(2t)) * exp(-(1/2) sum_m r_{2m+1} (2t)^{2m+1})``.
    """
    if not model.symmetric:
        raise ValueError(f"ladder-height series needs a symmetric law; {model.spec} is not")
    cfg = cfg or ExpansionConfig()
    beta = beta or beta_series(model, N, cfg)
    kap = [float(v) for v in model.cumulant_table(N + 2)]
    # psi'(t)/(2t) = (1/2) sum_{k>=2} kappa_k t^{k-2}/(k-1)!
    ratio = Series([0.5 * kap[k + 2] / math.factorial(k + 1) for k in range(N + 1)], label="theta1", mode="float")
    odd = [0.0] * (N + 1)
    odd_err = [0.0] * (N + 1)
    for n in range(1, N + 1, 2):
        odd[n] = -0.5 * beta[f"r{n}"] * 2.0**n
        odd_err[n] = 0.5 * beta.error(f"r{n}") * 2.0**n
    ex = Series(odd, label="theta1", mode="float").exp()
    root = (ratio * (1.0 / ratio[0])).sqrt() * math.sqrt(ratio[0])
    s = root * ex
    # first-order error: perturbation of the exponent
    err_exp = Series(odd_err, label="theta1", mode="float")
    e = [abs(v) for v in (root * ex * err_exp).coeffs]
    return ExpansionReport(
        kind="ladder",
        model=model.spec,
        order=N,
        names=[f"l{n}" for n in range(N + 1)],
        values=[float(v) for v in s.coeffs],
        errors=e,
        config={**cfg.echo()},
        diagnostics={"beta": dict(zip(beta.names, beta.values))},
    )


def evaluate_series(report: ExpansionReport, x: float, prefix: str) -> float:
    return sum(report[f"{prefix}{n}"] * x**n for n in range(report.order + 1))


def resolve_drift(model: IncrementModel, *, delta=None, theta0=None, mu=None):
    """``(delta, theta0, theta1)`` from exactly one drift specification."""
    given = [v is not None for v in (delta, theta0, mu)]
    if sum(given) != 1:
        raise ValueError("give exactly one of delta, theta0, mu")
    if delta is not None:
        if not delta > 0:
            raise ValueError("delta must be > 0")
        t1 = conjugate_theta1(model, delta)
        return delta, t1 - delta, t1
    if mu is not None:
        theta0 = theta0_for_drift(model, mu)
    if not theta0 < 0:
        raise ValueError("theta0 must be < 0")
    target = model.psi(theta0)
    from scipy.optimize import brentq

    hi = model.eta - 1e-12
    if model.psi(hi) < target:
        raise StripError("no conjugate theta1 inside the strip")
    t1 = float(brentq(lambda t: model.psi(t) - target, 1e-300, hi, xtol=1e-16, rtol=4 * np.finfo(float).eps))
    return t1 - theta0, theta0, t1


def tail_approx(model: IncrementModel, x: float, N: int = 4, *, delta=None, theta0=None, mu=None,
                cfg: ExpansionConfig | None = None, beta: ExpansionReport | None = None,
                dmax: float | None = None) -> dict:
    """Diffusion and corrected approximations of ``P(M > x)``."""
    if not x > 0:
        raise ValueError("x must be > 0")
    D, th0, th1 = resolve_drift(model, delta=delta, theta0=theta0, mu=mu)
    beta = beta or beta_series(model, N, cfg)
    mu_ = -model.dpsi(th0)
    sig2 = model.d2psi(th0)
    r = [beta[f"r{n}"] for n in range(1, N + 1)]
    re = [beta.error(f"r{n}") for n in range(1, N + 1)]
    out = {
        "delta": D,
        "theta0": th0,
        "theta1": th1,
        "mu": mu_,
        "sigma2": sig2,
        "diffusion": math.exp(-2 * mu_ * x / sig2),
        "corrected_order_1": math.exp(-D * x + r[0] * D),
        f"corrected_order_{N}": math.exp(-D * x + sum(rn * D ** (n + 1) for n, rn in enumerate(r))),
        "series_error_bound": sum(e * D ** (n + 1) for n, e in enumerate(re)),
        "warnings": [],
    }
    if dmax is not None and D > dmax:
        out["warnings"].append(f"delta={D:g} exceeds the validated radius {dmax:g}")
    return out


def delta_max(model: IncrementModel, grid=(0.05, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.8, 1.0)) -> float:
    """Largest grid ``D`` (scanned upward) with ``sup_lambda |v(theta1(D), lambda)| < 1``."""
    best = 0.0
    for D in grid:
        try:
            t1 = conjugate_theta1(model, D)
            if contraction_sup(model, t1) >= 1.0:
                break
        except (StripError, ValueError):
            break
        best = D
    return best


def s2_two_term(model: IncrementModel, cfg: QuadConfig | None = None) -> float:
    """The two-term closed form for ``[b^2] s(b)`` without the skewness correction, kept for comparison.

    ``(1/2pi) int lam^-2 (Im log(1 - g)/lam - mu_3) - (mu_4/12 - mu_3^2/18)``.
    Only finite when ``mu_3 = 0``.
    """
    from .quadrature import LineIntegrand, integrate_batch

    mu3, mu4 = model.moments[3], model.moments[4]
    if abs(mu3) > 0:
        raise ValueError("the two-term s2 integral diverges at the origin when mu_3 != 0")

    def f(lam, cache):
        return np.angle(1.0 - model.char(lam)) / lam**3

    r = integrate_batch([LineIntegrand(func=f)], 0.0, cfg, extra_edges=[0.5])[0]
    return r.value / (2 * math.pi) - (mu4 / 12 - mu3**2 / 18)
