"""Line integrals of kernel transforms and the direct (non-series) transforms.

All integrands are even in ``lambda``; we integrate over ``[0, inf)`` and
double.  The range is split into

* ``[0, lambda0]`` integrated exactly from the Taylor branch (coefficient
  work) or adaptively (direct transforms),
* ``[lambda0, Lambda]`` by vector-valued adaptive Gauss-Kronrod (G10/K21):
  a batch of integrands shares one panel set, so the summation order and
  therefore the result is deterministic,
* ``[Lambda, inf)`` where the non-oscillating asymptotic part
  ``(c + d log lambda) lambda^-p`` is integrated in closed form.  The
  remainder is bounded by the remainder's integral over the last two
  octaves below ``Lambda`` (it decays at least like ``lambda^-3``).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .increments import IncrementModel, StripError
from .kernels import Kernel, T_even

__all__ = [
    "QuadConfig",
    "QuadResult",
    "ContractionError",
    "cauchy_smooth",
    "QuadratureError",
    "contraction_sup",
    "j0_imag_residue",
    "analytic_zero_check",
    "j0_closed_form_check",
    "LineIntegrand",
    "I_direct",
    "gk_batch",
    "integrate_batch",
    "integrate_line",
    "j0_direct",
    "analytic_log_zero_check",
    "rho_direct",
    "rho_direct_ladder_form",
    "s_direct",
]


class QuadratureError(RuntimeError):
    pass


# Kronrod 21-point rule with embedded Gauss 10-point rule (QUADPACK qk21).
_XGK = np.array([
    0.995657163025808080735527280689003, 0.973906528517171720077964012084452,
    0.930157491355708226001207180059508, 0.865063366688984510732096688423493,
    0.780817726586416897063717578345042, 0.679409568299024406234327365114874,
    0.562757134668604683339000099272694, 0.433395394129247190799265943165784,
    0.294392862701460198131126603103866, 0.148874338981631210884826001129720,
    0.0,
])
_WGK = np.array([
    0.011694638867371874278064396062192, 0.032558162307964727478818972459390,
    0.054755896574351996031381300244580, 0.075039674810919952767043140916190,
    0.093125454583697605535065465083366, 0.109387158802297641899210590325805,
    0.123491976262065851077208292424625, 0.134709217311473325928054001771707,
    0.142775938577060080797094273138717, 0.147739104901338491374841515972068,
    0.149445554002916905664936468389821,
])
_WG = np.array([
    0.066671344308688137593568809893332, 0.149451349150580593145776339657697,
    0.219086362515982043995534934228163, 0.269266719309996355091226921569469,
    0.295524224714752870173892994651338,
])
_NODES = np.concatenate([-_XGK[:-1], [0.0], _XGK[:-1][::-1]])
_WK = np.concatenate([_WGK[:-1], [_WGK[-1]], _WGK[:-1][::-1]])
_WG21 = np.zeros(21)
_gauss_pos = [1, 3, 5, 7, 9]
for _i, _w in zip(_gauss_pos, _WG):
    _WG21[_i] = _w
    _WG21[20 - _i] = _w


@dataclass(frozen=True)
class QuadConfig:
    """Tolerances and cut points for the line integrals."""

    tol: float = 1e-12
    rtol: float = 1e-13
    direct_tol: float = 1e-12
    direct_rtol: float = 1e-12
    Lambda: float = 1e6
    max_panels: int = 400_000
    max_rounds: int = 80
    chunk: int = 16384


@dataclass
class QuadResult:
    """Value of ``int_{-inf}^{inf}`` of an even integrand, with diagnostics."""

    value: float
    error: float
    panel_error: float = 0.0
    tail_value: float = 0.0
    tail_error: float = 0.0
    panels: int = 0
    evaluations: int = 0
    converged: bool = True
    diagnostics: tuple[str, ...] = ()


@dataclass
class LineIntegrand:
    """Real even integrand on ``[lo, inf)`` plus an exactly known part on ``[0, lo]``.

    ``func(lam, cache)`` returns real values; ``tail`` lists
    ``(c, d, p)`` terms of the asymptotic model ``(c + d log lam) lam^-p``.
    """

    func: Callable[[np.ndarray, dict], np.ndarray]
    tail: Sequence[tuple[float, float, float]] = ()
    lower: float = 0.0
    lower_error: float = 0.0
    label: str = ""


def _tail_integral(terms, A) -> float:
    """``int_A^inf sum (c + d log x) x^-p dx``."""
    s = 0.0
    la = math.log(A)
    for c, d, p in terms:
        if c == 0 and d == 0:
            continue
        if p <= 1:
            raise QuadratureError(f"non-integrable tail term lambda^-{p}")
        q = p - 1.0
        s += A ** (-q) * (c / q + d * (la / q + 1.0 / (q * q)))
    return s


def gk_batch(
    func: Callable[[np.ndarray], np.ndarray],
    edges: Sequence[float],
    tol: np.ndarray | float,
    rtol: float = 0.0,
    *,
    max_panels: int = 400_000,
    max_rounds: int = 80,
    chunk: int = 16384,
):
    """Adaptive G10/K21 for a batch of ``m`` integrands sharing panels.

    ``func(x)`` maps nodes ``(n,)`` to values ``(m, n)``.  Returns panel
    endpoints, per-panel Kronrod integrals ``(m, P)``, per-panel error
    estimates ``(m, P)``, the number of evaluations and a convergence flag.
    """
    a = np.asarray(edges[:-1], dtype=float)
    b = np.asarray(edges[1:], dtype=float)

    def evaluate(a, b):
        mid, half = 0.5 * (a + b), 0.5 * (b - a)
        x = (mid[:, None] + half[:, None] * _NODES[None, :]).ravel()
        parts = []
        for s in range(0, x.size, chunk):
            parts.append(np.asarray(func(x[s : s + chunk]), dtype=float))
        vals = np.concatenate(parts, axis=-1)
        if vals.ndim == 1:
            vals = vals[None, :]
        vals = vals.reshape(vals.shape[0], a.size, 21)
        if not np.all(np.isfinite(vals)):
            raise QuadratureError("non-finite integrand value")
        k = (vals @ _WK) * half
        g = (vals @ _WG21) * half
        return k, np.abs(k - g)

    K, E = evaluate(a, b)
    nevals = 21 * a.size
    converged = False
    for _ in range(max_rounds):
        total = K.sum(axis=1)
        err = E.sum(axis=1)
        target = np.maximum(tol, rtol * np.abs(total))
        bad = err > target
        if not np.any(bad):
            converged = True
            break
        thresh = (target / a.size)[bad][:, None]
        split = np.any(E[bad] > thresh, axis=0)
        if a.size + split.sum() > max_panels:
            break
        mids = 0.5 * (a[split] + b[split])
        na = np.concatenate([a[~split], a[split], mids])
        nb = np.concatenate([b[~split], mids, b[split]])
        k_new, e_new = evaluate(np.concatenate([a[split], mids]), np.concatenate([mids, b[split]]))
        nevals += 21 * 2 * int(split.sum())
        K = np.concatenate([K[:, ~split], k_new], axis=1)
        E = np.concatenate([E[:, ~split], e_new], axis=1)
        order = np.argsort(na, kind="stable")
        a, b, K, E = na[order], nb[order], K[:, order], E[:, order]
    return a, b, K, E, nevals, converged


def _geometric_edges(lo: float, hi: float, extra: Sequence[float] = ()) -> np.ndarray:
    pts = {lo, hi, hi / 2, hi / 4}
    x = lo
    while x < hi:
        pts.add(x)
        x *= 2.0
    for e in extra:
        if lo < e < hi:
            pts.add(float(e))
    return np.array(sorted(pts))


def integrate_batch(
    integrands: Sequence[LineIntegrand],
    lo: float,
    cfg: QuadConfig | None = None,
    *,
    tol: float | None = None,
    rtol: float | None = None,
    extra_edges: Sequence[float] = (),
) -> list[QuadResult]:
    """``int_{-inf}^{inf}`` of each even integrand (twice the half-line integral)."""
    cfg = cfg or QuadConfig()
    tol = cfg.tol if tol is None else tol
    rtol = cfg.rtol if rtol is None else rtol
    L = cfg.Lambda
    edges = _geometric_edges(lo, L, extra_edges) if lo > 0 else np.concatenate(
        [[0.0], _geometric_edges(min(1e-3, min([e for e in extra_edges if e > 0], default=1.0) / 64), L, extra_edges)]
    )

    def func(x):
        cache: dict = {}
        return np.stack([it.func(x, cache) for it in integrands])

    # half-line tolerances; the tail bound consumes the rest of the budget
    a, b, K, E, nevals, converged = gk_batch(
        func, edges, 0.25 * tol, 0.25 * rtol, max_panels=cfg.max_panels, max_rounds=cfg.max_rounds, chunk=cfg.chunk
    )
    results = []
    in_oct1 = (a >= L / 2) & (b <= L)
    in_oct2 = (a >= L / 4) & (b <= L / 2)
    for i, it in enumerate(integrands):
        mid = float(K[i].sum())
        perr = float(E[i].sum())
        tail = _tail_integral(it.tail, L)
        rem1 = float(K[i][in_oct1].sum()) - (_tail_integral(it.tail, L / 2) - tail)
        rem2 = float(K[i][in_oct2].sum()) - (_tail_integral(it.tail, L / 4) - _tail_integral(it.tail, L / 2))
        terr = max(abs(rem1), abs(rem2))
        half = it.lower + mid + tail
        value = 2.0 * half
        error = 2.0 * (perr + terr + it.lower_error)
        diags = []
        if not converged:
            diags.append("panel budget exhausted before tolerance was met")
        target = max(tol, rtol * abs(value))
        ok = converged and error <= target
        if error > target:
            diags.append(f"estimated error {error:.2e} exceeds tolerance {target:.2e}")
        results.append(
            QuadResult(
                value=value,
                error=error,
                panel_error=2.0 * perr,
                tail_value=2.0 * tail,
                tail_error=2.0 * terr,
                panels=int(a.size),
                evaluations=nevals,
                converged=ok,
                diagnostics=tuple(diags),
            )
        )
    return results


# -- kernel integrals -----------------------------------------------------------


def _taylor_lower(h: Kernel, lo: float) -> float:
    """``int_0^lo h(lambda) d lambda`` for an even real kernel from its Taylor branch."""
    c = h.taylor.real
    s = 0.0
    for k in range(0, len(c), 2):
        a_k = (-1) ** (k // 2) * c[k]
        s += a_k * lo ** (k + 1) / (k + 1)
    return s


def kernel_integrand(h: Kernel, lo: float | None = None) -> LineIntegrand:
    """Integrand for an even real kernel: exact Taylor part below ``lo`` (default: the switch radius)."""
    lo = h.switch if lo is None else lo
    asym = h.asym if h.asym is not None else [(h.limit.real, h.log_growth, 0.0)]

    def func(lam, cache):
        return h.numeric(lam, cache).real

    return LineIntegrand(func=func, tail=asym, lower=_taylor_lower(h, lo), label=h.name)


def integrate_line(f, cfg: QuadConfig | None = None, tol: float | None = None) -> QuadResult:
    """``int_{-inf}^{inf} f(lambda) d lambda`` for a real even integrand.

    ``f`` is either an even real :class:`Kernel` or a :class:`LineIntegrand`
    (integrated from ``0``).
    """
    cfg = cfg or QuadConfig()
    if isinstance(f, Kernel):
        if abs(f.log_growth) > 0 and not f.asym:
            raise QuadratureError("integrand grows logarithmically")
        return integrate_batch([kernel_integrand(f)], f.switch, cfg, tol=tol)[0]
    return integrate_batch([f], 0.0, cfg, tol=tol)[0]


def integrate_T(hs: Sequence[Kernel], qs: Sequence[int], cfg: QuadConfig | None = None) -> list[QuadResult]:
    """``int T_q h`` over the real line for many (kernel, q) pairs at once."""
    cfg = cfg or QuadConfig()
    if not hs:
        return []
    lo = min(h.switch for h in hs)
    items = [kernel_integrand(T_even(q, h), lo) for h, q in zip(hs, qs)]
    return integrate_batch(items, lo, cfg)


# -- direct transforms ---------------------------------------------------------


def _log1p_c(z: np.ndarray) -> np.ndarray:
    """Complex ``log(1 + z)`` accurate for small ``|z|``."""
    u, v = z.real, z.imag
    return 0.5 * np.log1p(u * (2.0 + u) + v * v) + 1j * np.arctan2(v, 1.0 + u)


def _j0_integrand(log_f: Callable[[np.ndarray], np.ndarray], b: float):
    """Half-line integrand of ``J0(b, f)`` times ``pi``; ``log_f`` returns ``f(i lambda)``."""

    def func(lam, cache):
        f = log_f(lam)
        w = 1.0 / (b * b + lam * lam)
        return b * w * f.real - b * b * w * f.imag / lam

    return func


def _j0_tail(b: float, c: float, d: float, im_coef: float = 0.0, im_power: float = 2.0):
    """Tail model of the ``J0`` integrand for ``Re f ~ c + d log lam`` and ``Im f/lam ~ e lam^-q``."""
    terms = [(b * c, b * d, 2.0), (-(b**3) * c, -(b**3) * d, 4.0)]
    if im_coef:
        terms.append((-b * b * im_coef, 0.0, 2.0 + im_power))
    return terms


def j0_direct(log_f, b: float, tail, cfg: QuadConfig | None = None, extra_edges=()) -> QuadResult:
    """``J0(b, f) = (1/2pi) int -b/((b + i lam) i lam) f(i lam) d lam`` by direct quadrature."""
    cfg = cfg or QuadConfig()
    if not b > 0:
        raise ValueError("b must be positive")
    it = LineIntegrand(func=_j0_integrand(log_f, b), tail=tail)
    r = integrate_batch([it], 0.0, cfg, tol=cfg.direct_tol * math.pi, rtol=cfg.direct_rtol,
                        extra_edges=[b, *extra_edges])[0]
    # (1/2pi) * full-line integral
    scale = 1.0 / (2.0 * math.pi)
    return QuadResult(
        value=r.value * scale,
        error=r.error * scale,
        panel_error=r.panel_error * scale,
        tail_value=r.tail_value * scale,
        tail_error=r.tail_error * scale,
        panels=r.panels,
        evaluations=r.evaluations,
        converged=r.converged,
        diagnostics=r.diagnostics,
    )


def cauchy_smooth(f, t: float, tail=(), cfg: QuadConfig | None = None, extra_edges=()) -> QuadResult:
    """``K(t, f) = (1/2pi) int t f(lam)/(t^2 + lam^2) d lam`` for a real even ``f``.

    ``tail`` lists ``(c, d, p)`` terms of the integrand itself at large ``lam``.
    """
    cfg = cfg or QuadConfig()
    if not t > 0:
        raise ValueError("t must be positive")

    def func(lam, cache):
        return t * np.asarray(f(lam), dtype=float) / (t * t + lam * lam)

    r = integrate_batch([LineIntegrand(func=func, tail=tail)], 0.0, cfg, tol=cfg.direct_tol * math.pi,
                        rtol=cfg.direct_rtol, extra_edges=[t, *extra_edges])[0]
    scale = 1.0 / (2.0 * math.pi)
    return QuadResult(value=r.value * scale, error=r.error * scale, panel_error=r.panel_error * scale,
                      tail_value=r.tail_value * scale, tail_error=r.tail_error * scale, panels=r.panels,
                      evaluations=r.evaluations, converged=r.converged, diagnostics=r.diagnostics)


def _taylor_radius(model: IncrementModel, theta: float) -> float:
    return model.eta - abs(theta)


class _TiltedTaylor:
    """``gamma^(j)(theta)/j!`` as floats, plus the small-lambda switch radius."""

    def __init__(self, model: IncrementModel, theta: float, order: int = 80):
        self.c = [float(v) for v in model.mgf_taylor(theta, order)]
        self.switch = min(0.5, 0.5 * _taylor_radius(model, theta))
        self.order = order


def _log_A(model: IncrementModel, theta: float):
    """``lambda -> log A(theta, lambda)`` with
    ``A = 2 (gamma(theta) - gamma(theta + i lam)) / (lam (lam - 2 i phi'(theta)))``."""
    tt = _TiltedTaylor(model, theta)
    c = tt.c
    phi = c[0]
    d1 = c[1]  # phi'(theta)
    # P(x) = (phi'' - 1) + sum_{j>=3} 2 gamma^(j) x^(j-2) / j!
    P = [2.0 * c[2] - 1.0] + [2.0 * c[j] for j in range(3, tt.order + 1)]

    def f(lam):
        lam = np.asarray(lam, dtype=float)
        out = np.empty(lam.shape, dtype=complex)
        small = lam < tt.switch
        if np.any(small):
            x = 1j * lam[small]
            p = np.zeros_like(x)
            for coef in P[::-1]:
                p = p * x + coef
            am1 = p if d1 == 0.0 else x * p / (x + 2.0 * d1)
            out[small] = _log1p_c(am1)
        big = ~small
        if np.any(big):
            lb = lam[big]
            g = model.mgf(theta + 1j * lb, 0)
            den = lb * lb - 2j * lb * d1
            am1 = -(2.0 * (g - phi - 1j * lb * d1) + lb * lb) / den
            near = np.abs(am1) < 0.5
            # far from A = 1 the direct quotient keeps full relative accuracy
            vals = np.empty(lb.shape, dtype=complex)
            vals[near] = _log1p_c(am1[near])
            vals[~near] = np.log(2.0 * (phi - g[~near]) / den[~near])
            out[big] = vals
        return out

    return f, phi, d1, tt


def rho_direct(model: IncrementModel, theta: float, b: float, cfg: QuadConfig | None = None) -> QuadResult:
    """``rho(theta, b) = log E_theta exp(-b R(inf))`` by one line integral."""
    if not 0 <= theta < model.eta:
        raise StripError(f"theta={theta} outside [0, {model.eta})")
    f, phi, d1, tt = _log_A(model, theta)
    tail = _j0_tail(b, math.log(2.0 * phi), -2.0, im_coef=2.0 * d1, im_power=2.0)
    return j0_direct(f, b, tail, cfg, extra_edges=[tt.switch] + ([2 * d1] if d1 > 0 else []))


def s_direct(model: IncrementModel, b: float, cfg: QuadConfig | None = None) -> QuadResult:
    """Zero-tilt term ``s(b) = rho(0, b)``."""
    return rho_direct(model, 0.0, b, cfg)


def _phi2_eff(model: IncrementModel, theta: float, c) -> float:
    """``1 - H(theta, 0) = phi''(theta) - (2 mu_3 / 3) phi'(theta)``."""
    return 2.0 * c[2] - 2.0 * model.moments[3] / 3.0 * c[1]


class ContractionError(QuadratureError):
    """``sup_lambda |v(theta, lambda)| >= 1``: the log series behind ``I`` does not contract."""


def _v_function(model: IncrementModel, theta: float, uncentered_phi2: bool = False):
    """``lambda -> v = Gtilde x/(x + Psi)`` with ``x = i lambda``; also returns ``Psi`` and the switch."""
    tt = _TiltedTaylor(model, theta)
    c = tt.c
    phi, d1 = c[0], c[1]
    p2 = 2.0 * c[2] if uncentered_phi2 else _phi2_eff(model, theta, c)
    psi_hat = 2.0 * d1 / p2
    # H(theta, x) = 1 - sum_{n>=1} S_n x^(n-1) with S = S1/D near the origin
    D = [float(v) for v in _mp_D(model, tt.order)]
    n_s = min(len(D), tt.order - 1)
    S1 = [c[j + 1] for j in range(n_s)]
    S = []
    for k in range(n_s):
        s = S1[k]
        for i in range(1, k + 1):
            s -= D[i] * S[k - i]
        S.append(s / D[0])
    Hcoef = [-S[n + 1] for n in range(n_s - 1)]
    Hcoef[0] += 1.0
    h0 = 1.0 - p2

    def v(lam):
        lam = np.asarray(lam, dtype=float)
        x = 1j * lam
        H = np.empty(lam.shape, dtype=complex)
        small = np.abs(lam) < tt.switch
        if np.any(small):
            xs = x[small]
            acc = np.zeros_like(xs)
            for coef in Hcoef[::-1]:
                acc = acc * xs + coef
            H[small] = acc
        big = ~small
        if np.any(big):
            lb = lam[big]
            g0 = model.char(lb)
            gt = model.mgf(theta + 1j * lb, 0)
            H[big] = 1.0 - 2j * d1 / lb - (phi - gt) / (1.0 - g0)
        G = (H - h0) / p2
        return G * x / (x + psi_hat)

    return v, psi_hat, tt.switch, phi, p2


def contraction_sup(model: IncrementModel, theta: float, lam_max: float = 200.0, n: int = 20001) -> float:
    """``sup_lambda |v(theta, lambda)|`` over a grid dense near the origin."""
    if not 0 < theta < model.eta:
        raise StripError(f"theta={theta} outside (0, {model.eta})")
    v = _v_function(model, theta)[0]
    lam = np.concatenate([np.linspace(1e-6, 5.0, n), np.geomspace(5.0, lam_max, n // 4)])
    return float(np.max(np.abs(v(lam))))


def I_direct(model: IncrementModel, theta: float, b: float, cfg: QuadConfig | None = None,
             uncentered_phi2: bool = False, check: bool = True) -> QuadResult:
    """``J0(b, log(1 - v))``: the tilt-dependent part of ``rho``.

    ``uncentered_phi2`` swaps the centered ``1 - H(theta, 0)`` for ``phi''(theta)``.
    """
    if not 0 < theta < model.eta:
        raise StripError(f"theta={theta} outside (0, {model.eta})")
    if check:
        sup = contraction_sup(model, theta)
        if not sup < 1.0:
            raise ContractionError(f"sup_lambda |v(theta={theta:g}, lambda)| = {sup:.6g} >= 1")
    v, psi_hat, switch, phi, p2 = _v_function(model, theta, uncentered_phi2)

    def f(lam):
        return _log1p_c(-v(lam))

    tail = _j0_tail(b, math.log(phi / p2), 0.0)
    return j0_direct(f, b, tail, cfg, extra_edges=[switch, psi_hat])


def _mp_D(model, order):
    mu = model.mp_moments(order + 2)
    return [mu[n + 2] / math.factorial(n + 2) for n in range(order - 1)]


def rho_direct_ladder_form(model: IncrementModel, theta: float, b: float, cfg: QuadConfig | None = None) -> QuadResult:
    """Cross-check of ``rho`` using ``log((gamma(theta) - gamma(theta + i lam)) / (-i lam phi'(theta)))``."""
    if not 0 < theta < model.eta:
        raise StripError("the cross-check needs theta > 0")
    tt = _TiltedTaylor(model, theta)
    c = tt.c
    phi, d1 = c[0], c[1]
    # B = S1(x)/phi' near the origin, S1 = sum_{j>=1} gamma^(j) x^(j-1)/j!
    S1 = [c[j] / d1 for j in range(1, tt.order + 1)]

    def f(lam):
        lam = np.asarray(lam, dtype=float)
        out = np.empty(lam.shape, dtype=complex)
        small = lam < tt.switch
        if np.any(small):
            x = 1j * lam[small]
            acc = np.zeros_like(x)
            for coef in S1[:0:-1]:
                acc = acc * x + coef
            out[small] = _log1p_c(acc * x)
        big = ~small
        if np.any(big):
            lb = lam[big]
            B = (phi - model.mgf(theta + 1j * lb, 0)) / (-1j * lb * d1)
            out[big] = np.log(B)
        return out

    tail = _j0_tail(b, math.log(phi / d1), -1.0, im_coef=math.pi / 2, im_power=1.0)
    return j0_direct(f, b, tail, cfg, extra_edges=[tt.switch, d1])


def analytic_log_zero_check(a: float, b: float, cfg: QuadConfig | None = None) -> QuadResult:
    """``J0(b, log(1 + a i lam))``, which vanishes for ``a > 0``."""

    def f(lam):
        return np.log1p(1j * a * np.asarray(lam))

    tail = _j0_tail(b, math.log(a), 1.0, im_coef=math.pi / 2, im_power=1.0)
    return j0_direct(f, b, tail, cfg, extra_edges=[1.0 / a])


def analytic_zero_check(m: int, n: int, a: float, b: float, cfg: QuadConfig | None = None) -> QuadResult:
    """``J0(b, (i lam)^(m+1)/(a + i lam)^(m+n+1))``, which vanishes for ``a, b >= 0``."""
    p = m + n + 1

    def f(lam):
        x = 1j * np.asarray(lam, dtype=float)
        return x ** (m + 1) / (a + x) ** p

    # f ~ x^(-n): the leading tail term of the integrand is O(lambda^-(n+2))
    if n == 0:
        tail = _j0_tail(b, 1.0, 0.0, im_coef=a * (m + 1), im_power=2.0)
    else:
        tail = []
    return j0_direct(f, b, tail, cfg, extra_edges=[a] if a > 0 else [])


def j0_closed_form_check(b: float, which: str, cfg: QuadConfig | None = None) -> tuple[float, float]:
    """``(numeric, exact)`` for ``J0(b, i lam/(1+lam^2))`` (``which='odd'``) or
    ``J0(b, lam^2/(1+lam^2))`` (``which='even'``) or ``K(b, 1/(1+lam^2))`` (``which='cauchy'``)."""
    if which == "odd":
        def f(lam):
            lam = np.asarray(lam, dtype=float)
            return 1j * lam / (1 + lam * lam) + 0j

        exact = -b / (2 * (1 + b))
        tail = _j0_tail(b, 0.0, 0.0, im_coef=1.0, im_power=2.0)
    elif which == "even":
        def f(lam):
            lam = np.asarray(lam, dtype=float)
            return lam * lam / (1 + lam * lam) + 0j

        exact = b / (2 * (1 + b))
        tail = _j0_tail(b, 1.0, 0.0)
    elif which == "cauchy":
        # K(b, 1/(1+lam^2)); integrand ~ b lam^-4
        r = cauchy_smooth(lambda lam: 1.0 / (1.0 + lam * lam), b, [(b, 0.0, 4.0), (-b * (1 + b * b), 0.0, 6.0)],
                          cfg, extra_edges=[1.0])
        return r.value, 1.0 / (2 * (1 + b))
    else:
        raise ValueError("which must be 'odd', 'even' or 'cauchy'")
    r = j0_direct(f, b, tail, cfg, extra_edges=[1.0])
    return r.value, exact


def j0_imag_residue(f: Kernel, b: float, cfg: QuadConfig | None = None) -> QuadResult:
    """``Im J0(b, f)`` by quadrature of the imaginary part at ``+lambda`` and ``-lambda``.

    Vanishes for kernels with the parity property; both signs of ``lambda``
    are evaluated independently so this is a genuine check.
    """
    cfg = cfg or QuadConfig()

    def func(lam, cache):
        fp = f(lam)
        fm = f(-lam)
        w = 1.0 / (b * b + lam * lam)
        wr, wi = b * w, b * b * w / lam
        return wr * (fp.imag + fm.imag) + wi * (fp.real - fm.real)

    # integrate_batch doubles a half-line integral; undo that, then scale by 1/(2 pi)
    r = integrate_batch([LineIntegrand(func=func)], 0.0, cfg, extra_edges=[b, f.switch])[0]
    s = 0.5 / (2.0 * math.pi)
    return QuadResult(value=r.value * s, error=r.error * s, panel_error=r.panel_error * s,
                      tail_value=r.tail_value * s, tail_error=r.tail_error * s, panels=r.panels,
                      evaluations=r.evaluations, converged=r.converged, diagnostics=r.diagnostics)
