"""Kernels on the imaginary axis and the operators used to reduce them.

A :class:`Kernel` is a function ``f(i lambda)`` known two ways: a Taylor
series in ``x = i lambda`` used near the origin, and a closed-form numeric
evaluator used away from it.  Kernels with real Taylor coefficients are
exactly the ones with even real part and odd imaginary part.

Besides values, each kernel tracks its behaviour as ``|lambda| -> inf``
(``limit`` plus a ``log_growth`` coefficient for ``log|lambda|``); the
quadrature layer integrates that part of the tail analytically.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Callable, Sequence

import mpmath
import numpy as np

from .increments import MP_DPS, IncrementModel
from .pseries import Series

__all__ = [
    "Kernel",
    "KernelConfig",
    "KernelError",
    "KernelSeries",
    "ReducedKernels",
    "T_even",
    "T_op",
    "assemble_reduced_kernels",
    "gtilde_powers",
    "h_tilde",
    "log_char_kernel",
    "closed_form_reduced_kernels",
]

_ids = itertools.count()


class KernelError(ValueError):
    pass


@dataclass(frozen=True)
class KernelConfig:
    """Numerical parameters shared by the kernel layer."""

    switch: float = 0.5
    taylor_order: int = 96
    min_taylor: int = 12

    def __post_init__(self):
        if not 0 < self.switch < 1:
            raise KernelError("switch radius must lie in (0, 1)")
        if self.taylor_order < 16:
            raise KernelError("taylor_order must be >= 16")


NumericFn = Callable[[np.ndarray, dict], np.ndarray]


class Kernel:
    """Hybrid Taylor/closed-form evaluator of ``f(i lambda)``."""

    __slots__ = ("taylor", "_numeric", "switch", "limit", "log_growth", "asym", "name", "uid")

    def __init__(
        self,
        taylor,
        numeric: NumericFn,
        *,
        switch: float = 0.5,
        limit: complex = 0.0,
        log_growth: float = 0.0,
        asym: Sequence[tuple[float, float, float]] | None = None,
        name: str = "",
    ):
        self.taylor = np.asarray(taylor, dtype=complex)
        self._numeric = numeric
        self.switch = float(switch)
        self.limit = complex(limit)
        self.log_growth = float(log_growth)
        self.asym = tuple(asym) if asym is not None else None
        self.name = name
        self.uid = next(_ids)

    def __repr__(self):
        return f"Kernel({self.name or self.uid}, taylor_order={self.order})"

    # -- properties -----------------------------------------------------------
    @property
    def order(self) -> int:
        return len(self.taylor) - 1

    @property
    def parity(self) -> bool:
        """Even real part / odd imaginary part (equivalently: real Taylor coefficients)."""
        scale = max(1.0, float(np.max(np.abs(self.taylor))))
        return bool(np.max(np.abs(self.taylor.imag)) <= 1e-12 * scale) and abs(self.limit.imag) <= 1e-12

    @property
    def vanishes(self) -> bool:
        return abs(self.taylor[0]) <= 1e-12 * max(1.0, float(np.max(np.abs(self.taylor[:4]))))

    # -- evaluation -----------------------------------------------------------
    def numeric(self, lam, cache: dict | None = None) -> np.ndarray:
        if cache is None:
            cache = {}
        v = cache.get(self.uid)
        if v is None:
            v = self._numeric(np.asarray(lam, dtype=float), cache)
            cache[self.uid] = v
        return v

    def taylor_eval(self, lam) -> np.ndarray:
        x = 1j * np.asarray(lam, dtype=float)
        acc = np.zeros_like(x)
        for c in self.taylor[::-1]:
            acc = acc * x + c
        return acc

    def __call__(self, lam, cache: dict | None = None) -> np.ndarray:
        lam = np.atleast_1d(np.asarray(lam, dtype=float))
        out = np.empty(lam.shape, dtype=complex)
        near = np.abs(lam) < self.switch
        if np.any(near):
            out[near] = self.taylor_eval(lam[near])
        far = ~near
        if np.any(far):
            out[far] = self.numeric(lam[far], {})
        return out

    def seam_error(self, factors=(0.8, 0.9, 1.0)) -> float:
        """Largest relative gap between the two branches just inside the switch radius."""
        lam = self.switch * np.asarray(factors)
        a = self.taylor_eval(lam)
        b = self.numeric(lam, {})
        return float(np.max(np.abs(a - b) / np.maximum(1.0, np.abs(b))))

    def check_parity(self, lam=None, tol: float = 1e-10) -> bool:
        """``f(-lambda) = conj f(lambda)`` on a grid, using the numeric branch on both sides."""
        if not self.parity:
            return False
        lam = np.linspace(self.switch, 20.0, 41) if lam is None else np.asarray(lam, dtype=float)
        pos = self.numeric(lam, {})
        neg = self.numeric(-lam, {})
        if not (np.all(np.isfinite(pos)) and np.all(np.isfinite(neg))):
            return False
        return bool(np.all(np.abs(neg - np.conj(pos)) <= tol * np.maximum(1.0, np.abs(pos))))

    # -- algebra --------------------------------------------------------------
    @staticmethod
    def combine(terms: Sequence[tuple[complex, "Kernel"]], name: str = "") -> "Kernel":
        """Linear combination ``sum c_i K_i``."""
        terms = [(c, k) for c, k in terms if c != 0]
        if not terms:
            raise KernelError("empty linear combination")
        n = min(k.order for _, k in terms)
        tay = sum(c * k.taylor[: n + 1] for c, k in terms)
        sw = max(k.switch for _, k in terms)

        def num(lam, cache):
            acc = terms[0][0] * terms[0][1].numeric(lam, cache)
            for c, k in terms[1:]:
                acc = acc + c * k.numeric(lam, cache)
            return acc

        return Kernel(
            tay,
            num,
            switch=sw,
            limit=sum(c * k.limit for c, k in terms),
            log_growth=float(np.real(sum(c * k.log_growth for c, k in terms))),
            name=name,
        )

    def __add__(self, other):
        if not isinstance(other, Kernel):
            return NotImplemented
        return Kernel.combine([(1.0, self), (1.0, other)])

    def __sub__(self, other):
        if not isinstance(other, Kernel):
            return NotImplemented
        return Kernel.combine([(1.0, self), (-1.0, other)])

    def __neg__(self):
        return Kernel.combine([(-1.0, self)])

    def __mul__(self, other):
        if isinstance(other, (int, float, complex, np.number)):
            return Kernel.combine([(other, self)])
        if not isinstance(other, Kernel):
            return NotImplemented
        if self.log_growth or other.log_growth:
            raise KernelError("products of logarithmically growing kernels are not supported")
        n = min(self.order, other.order)
        tay = np.convolve(self.taylor[: n + 1], other.taylor[: n + 1])[: n + 1]
        a, b = self, other

        def num(lam, cache):
            return a.numeric(lam, cache) * b.numeric(lam, cache)

        return Kernel(tay, num, switch=max(a.switch, b.switch), limit=a.limit * b.limit)

    __rmul__ = __mul__

    # -- real-line views ------------------------------------------------------
    def re_part(self) -> "Kernel":
        """``lambda -> Re f(i lambda)`` as an even real kernel."""
        tay = self.taylor.real.copy()
        tay[1::2] = 0.0
        f = self

        def num(lam, cache):
            return f.numeric(lam, cache).real.astype(complex)

        lim = self.limit.real
        return Kernel(tay, num, switch=self.switch, limit=lim, log_growth=self.log_growth,
                      asym=[(lim, self.log_growth, 0.0)], name=f"Re[{self.name}]")

    def im_over_lambda(self) -> "Kernel":
        """``lambda -> Im f(i lambda) / lambda`` as an even real kernel."""
        odd = self.taylor.real[1::2]
        tay = np.zeros(2 * len(odd) - 1 if len(odd) else 1)
        tay[::2] = odd
        f = self

        def num(lam, cache):
            return (f.numeric(lam, cache).imag / lam).astype(complex)

        return Kernel(tay, num, switch=self.switch, limit=0.0, asym=[], name=f"Im[{self.name}]/lambda")


def _shift_check(f: Kernel, j: int, cfg_min: int):
    if f.order - j < cfg_min:
        raise KernelError(f"Taylor branch too short for shift {j} (order {f.order})")


def T_op(j: int, f: Kernel, min_taylor: int = 12) -> Kernel:
    """``(f(x) - sum_{m=1}^{j} c_m x^m) / x^j`` for a kernel vanishing at the origin."""
    if j < 0:
        raise KernelError("shift must be >= 0")
    if j == 0:
        return f
    if not f.vanishes:
        raise KernelError("the shift operator needs a kernel vanishing at the origin")
    _shift_check(f, j, min_taylor)
    c = f.taylor
    tay = np.concatenate([[0.0], c[j + 1 :]])
    poly = c[1 : j + 1].copy()

    def num(lam, cache):
        x = 1j * lam
        p = np.zeros_like(x)
        for cm in poly[::-1]:
            p = (p + cm) * x
        return (f.numeric(lam, cache) - p) / x**j

    return Kernel(tay, num, switch=f.switch, limit=-c[j], name=f"T~{j}[{f.name}]")


def T_even(q: int, h: Kernel, min_taylor: int = 12) -> Kernel:
    """``(h(lambda) - sum_{k<q} a_k lambda^{2k}) / lambda^{2q}`` for an even real kernel."""
    if q < 0:
        raise KernelError("q must be >= 0")
    if q == 0:
        return h
    _shift_check(h, 2 * q, min_taylor)
    c = h.taylor.real
    a = np.array([(-1) ** k * c[2 * k] for k in range(q)])
    tay = (-1) ** q * c[2 * q :]
    asym_in = h.asym if h.asym is not None else [(h.limit.real, h.log_growth, 0.0)]
    asym = [(cc, d, p + 2 * q) for cc, d, p in asym_in] + [(-a[k], 0.0, float(2 * q - 2 * k)) for k in range(q)]

    def num(lam, cache):
        l2 = lam * lam
        p = np.zeros_like(lam)
        for ak in a[::-1]:
            p = p * l2 + ak
        return ((h.numeric(lam, cache).real - p) / l2**q).astype(complex)

    return Kernel(tay, num, switch=h.switch, limit=0.0, asym=asym, name=f"T{q}[{h.name}]")


class KernelSeries:
    """Coefficients ``f_0, f_1, ...`` of a kernel-valued power series in ``theta`` (``None`` = 0)."""

    def __init__(self, terms: Sequence[Kernel | None]):
        self.terms = list(terms)

    def __getitem__(self, k):
        return self.terms[k] if 0 <= k < len(self.terms) else None

    def __len__(self):
        return len(self.terms)

    @property
    def order(self) -> int:
        return len(self.terms) - 1


# -- model kernels --------------------------------------------------------------


def _mp_series_div(a, b, n):
    """First ``n+1`` coefficients of ``a/b`` (mpmath lists, ``b[0] != 0``)."""
    out = []
    for k in range(n + 1):
        s = a[k] if k < len(a) else mpmath.mpf(0)
        for i in range(1, min(k, len(b) - 1) + 1):
            s -= b[i] * out[k - i]
        out.append(s / b[0])
    return out


class _ModelData:
    """Per-model moment series shared by the base kernels."""

    def __init__(self, model: IncrementModel, cfg: KernelConfig, k_max: int):
        self.model, self.cfg = model, cfg
        M = cfg.taylor_order
        self.K = k_max + M + 6
        with mpmath.workdps(MP_DPS):
            mu = model.mp_moments(self.K)
            self.mu = mu
            fact = [mpmath.factorial(n) for n in range(self.K + 1)]
            self.D = [mu[n + 2] / fact[n + 2] for n in range(self.K - 1)]
            self.Q = {}
            for k in range(1, k_max + 1):
                num = [mu[k + n] / fact[n] for n in range(1, self.K - k + 1)]
                self.Q[k] = _mp_series_div(num, self.D, M + 2)
        self.mu_f = [float(v) for v in mu]

    def base(self, lam, cache, k):
        key = ("mgf", k)
        v = cache.get(key)
        if v is None:
            v = self.model.mgf(1j * lam, k)
            cache[key] = v
        return v

    def one_minus_char(self, lam, cache):
        key = ("1-g",)
        v = cache.get(key)
        if v is None:
            v = 1.0 - self.base(lam, cache, 0)
            cache[key] = v
        return v

    def h_at_zero(self, k) -> float:
        """``h_k(0)``; equals ``-mu_{k+2} + (2 mu_3 / 3) mu_{k+1}``."""
        return -float(self.Q[k][1])


_DATA_CACHE: dict = {}


def _data(model: IncrementModel, cfg: KernelConfig, k_max: int) -> _ModelData:
    key = (model.spec, cfg)
    d = _DATA_CACHE.get(key)
    if d is None or max(d.Q) < k_max:
        d = _ModelData(model, cfg, max(k_max, 8))
        _DATA_CACHE[key] = d
    return d


def h_tilde(model: IncrementModel, k: int, cfg: KernelConfig | None = None, variant: str = "centered") -> Kernel:
    """Base kernel ``h_k(i lambda) - h_k(0)``.

    ``h_k(x) = (gamma^(k)(x) - mu_k)/(1 - gamma(x)) + 2 mu_{k+1}/x``.  With
    ``variant="uncentered"`` the constant ``mu_{k+2}`` is added instead of
    ``-h_k(0)``; the two agree only when ``mu_3 = 0``.
    """
    cfg = cfg or KernelConfig()
    if k < 1:
        raise KernelError("k must be >= 1")
    d = _data(model, cfg, k)
    M = cfg.taylor_order
    Q = d.Q[k]
    h_coef = [-float(Q[n + 1]) for n in range(M + 1)]  # Taylor of h_k
    h0 = h_coef[0]
    shift = -h0 if variant == "centered" else d.mu_f[k + 2]
    if variant not in ("centered", "uncentered"):
        raise KernelError(f"unknown variant {variant!r}")
    tay = np.array(h_coef, dtype=complex)
    tay[0] += shift
    mu_k, mu_k1 = d.mu_f[k], d.mu_f[k + 1]

    def num(lam, cache):
        x = 1j * lam
        return (d.base(lam, cache, k) - mu_k) / d.one_minus_char(lam, cache) + 2 * mu_k1 / x + shift

    return Kernel(tay, num, switch=cfg.switch, limit=-mu_k + shift, name=f"h~{k}")


def log_char_kernel(model: IncrementModel, cfg: KernelConfig | None = None) -> Kernel:
    """``log(2 (1 - g(lambda)) / lambda^2)``, the kernel of the zero-tilt term."""
    cfg = cfg or KernelConfig()
    d = _data(model, cfg, 1)
    M = cfg.taylor_order
    with mpmath.workdps(MP_DPS):
        c0 = 2 * d.D[0]  # = mu_2 = 1 up to rounding
        two_d = Series([mpmath.mpf(1)] + [2 * v / c0 for v in d.D[1 : M + 1]], mode="float")
        tay = [float(v) for v in two_d.log().coeffs]
        tay[0] += float(mpmath.log(c0))

    def num(lam, cache):
        return np.log(2.0 * d.one_minus_char(lam, cache)) - 2.0 * np.log(np.abs(lam))

    return Kernel(tay, num, switch=cfg.switch, limit=math.log(2.0), log_growth=-2.0, name="L")


def _theta_series_mp(model, cfg, n):
    """Float coefficient lists of ``1/phi2_eff(theta)`` and ``chi(theta)`` up to ``theta^n``."""
    d = _data(model, cfg, n + 2)
    mu = d.mu
    with mpmath.workdps(MP_DPS):
        fact = [mpmath.factorial(i) for i in range(n + 3)]
        # phi2_eff = 1 - H(theta, 0) = 1 - sum_{k>=1} h_k(0) theta^k / k!
        p2 = Series([mpmath.mpf(1)] + [d.Q[k][1] / fact[k] for k in range(1, n + 1)], mode="float")
        inv = p2.reciprocal()
        dphi_over = Series([mu[k + 2] / fact[k + 1] for k in range(n + 1)], mode="float")
        chi = dphi_over * inv * (-2)
    return [float(v) for v in inv.coeffs], [float(v) for v in chi.coeffs], [float(v) for v in p2.coeffs]


def gtilde_powers(model: IncrementModel, m_max: int, n: int, cfg: KernelConfig | None = None) -> list[KernelSeries]:
    """``[theta^k] Gtilde^m`` for ``m = 1..m_max``, ``k <= n``; entry ``m-1`` of the list.

    ``Gtilde = Htilde / phi2_eff`` with ``Htilde = sum_k h~_k theta^k / k!``.
    """
    cfg = cfg or KernelConfig()
    inv, _, _ = _theta_series_mp(model, cfg, n)
    h = [None] + [h_tilde(model, k, cfg) for k in range(1, n + 1)]
    g1: list[Kernel | None] = [None]
    for k in range(1, n + 1):
        terms = [(inv[k - i] / math.factorial(i), h[i]) for i in range(1, k + 1) if inv[k - i] != 0]
        g1.append(Kernel.combine(terms, name=f"g~{k},1"))
    out = [KernelSeries(g1)]
    for m in range(2, m_max + 1):
        prev = out[-1]
        gm: list[Kernel | None] = [None] * (n + 1)
        for k in range(m, n + 1):
            parts = []
            for i in range(1, k - m + 2):
                a, b = g1[i], prev[k - i]
                if a is not None and b is not None:
                    parts.append(a * b)
            if parts:
                gm[k] = Kernel.combine([(1.0, p) for p in parts], name=f"g~{k},{m}")
        out.append(KernelSeries(gm))
    return out


@dataclass
class ReducedKernels:
    """Kernels ``E[j, M]`` with ``I(theta, b) = sum_M theta^M sum_j chi^j J0(b, E[j, M])``."""

    E: dict
    chi: list
    phi2_eff: list
    order: int


def assemble_reduced_kernels(model: IncrementModel, n: int, cfg: KernelConfig | None = None) -> ReducedKernels:
    cfg = cfg or KernelConfig()
    g = gtilde_powers(model, n, n, cfg)
    _, chi, p2 = _theta_series_mp(model, cfg, n)
    E = {}
    for M in range(1, n + 1):
        for j in range(0, M):
            terms = []
            for m in range(1, M - j + 1):
                gk = g[m - 1][M - j]
                if gk is None:
                    continue
                terms.append((-math.comb(m + j - 1, j) / m, T_op(j, gk, cfg.min_taylor)))
            if terms:
                E[(j, M)] = Kernel.combine(terms, name=f"E{j},{M}")
    return ReducedKernels(E=E, chi=chi, phi2_eff=p2, order=n)


def closed_form_reduced_kernels(model: IncrementModel, n: int, cfg: KernelConfig | None = None) -> dict:
    """``E[j, m]`` via the closed-form sum over ``k`` with ``g^pr_{k,m} = [theta^{k+m}] Gtilde^m``."""
    cfg = cfg or KernelConfig()
    g = gtilde_powers(model, n, n, cfg)
    E = {}
    for m in range(1, n + 1):
        for j in range(0, m):
            terms = []
            for k in range(0, m - j):
                mm = m - j - k
                gk = g[mm - 1][k + mm]
                if gk is None:
                    continue
                terms.append((-math.comb(m - k - 1, j) / (m - j - k), T_op(j, gk, cfg.min_taylor)))
            if terms:
                E[(j, m)] = Kernel.combine(terms, name=f"Epr{j},{m}")
    return E
