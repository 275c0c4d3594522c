"""Standardized increment laws with closed-form moment generating functions.

Every model is an affine rescaling of a textbook family to mean 0 and
variance 1.  The family whitelist is deliberate: the expansion needs
``gamma^(k)(i lambda)`` to high order, which black-box densities cannot supply
reliably.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Any, Mapping

import mpmath
import numpy as np
from scipy.optimize import brentq

from .pseries import Series, ps_revert

__all__ = [
    "IncrementModel",
    "LatticeError",
    "ModelError",
    "NonlatticeGateError",
    "StripError",
    "conjugate_theta0",
    "conjugate_theta1",
    "cumulants_from_moments",
    "make_model",
    "mgf_eval",
    "moments_from_cumulants",
    "parse_distribution",
    "sample_tilted",
    "theta0_for_drift",
    "theta1_series",
]

FAMILIES = ("gaussian", "centered_exponential", "laplace", "centered_uniform", "shifted_gamma")
LATTICE_NAMES = {"bernoulli", "rademacher", "binomial", "poisson", "geometric", "lattice", "simple_random_walk"}

NONLATTICE_GRID = (1e-2, 200.0)
NONLATTICE_FLOOR = 1e-10
STRIP_CAP = 10.0
MP_DPS = 40


class ModelError(ValueError):
    """The requested increment law cannot be used."""


class LatticeError(ModelError):
    """Lattice (or otherwise non-strongly-nonlattice) increment families."""


class NonlatticeGateError(ModelError):
    """The numeric strong-nonlattice gate failed."""


class StripError(ValueError):
    """An argument lies outside the analyticity strip of the MGF."""


# -- scalar helpers ---------------------------------------------------------


def _log1pmx(t: float) -> float:
    """``log(1 + t) - t`` without cancellation for small ``t``."""
    if abs(t) < 0.25:
        s, p = 0.0, t
        for n in range(2, 60):
            p *= -t
            s += p / n
            if abs(p) < 1e-18 * max(abs(s), 1e-300):
                break
        return s
    return math.log1p(t) - t


def _log_sinhc(x: float) -> float:
    """``log(sinh(x)/x)``."""
    x = abs(x)
    if x < 0.5:
        x2 = x * x
        # sum_{n>=1} 2^{2n} B_{2n} x^{2n} / (2n (2n)!)
        return x2 * (1 / 6 + x2 * (-1 / 180 + x2 * (1 / 2835 + x2 * (-1 / 37800 + x2 * (1 / 467775 + x2 * (-691 / 3831077250))))))
    if x > 30:
        return x - math.log(2 * x) + math.log1p(-math.exp(-2 * x))
    return math.log(math.sinh(x) / x)


def _langevin(x: float) -> float:
    """``coth(x) - 1/x``."""
    if abs(x) < 0.5:
        x2 = x * x
        return x * (1 / 3 + x2 * (-1 / 45 + x2 * (2 / 945 + x2 * (-1 / 4725 + x2 * (2 / 93555)))))
    return 1 / math.tanh(x) - 1 / x


def _langevin_prime(x: float) -> float:
    """``1/x^2 - 1/sinh(x)^2``."""
    if abs(x) < 0.5:
        x2 = x * x
        return 1 / 3 + x2 * (-1 / 15 + x2 * (2 / 189 + x2 * (-1 / 675 + x2 * (2 / 10395))))
    return 1 / (x * x) - 1 / math.sinh(x) ** 2


def moments_from_cumulants(kappa):
    """Raw moments ``mu_0..mu_K`` from cumulants ``kappa_0..kappa_K`` (``kappa_0`` ignored)."""
    K = len(kappa) - 1
    mu = [kappa[0] * 0 + 1] + [None] * K
    for n in range(1, K + 1):
        s = 0
        for k in range(1, n + 1):
            s = s + math.comb(n - 1, k - 1) * kappa[k] * mu[n - k]
        mu[n] = s
    return mu


def cumulants_from_moments(mu):
    """Cumulants ``kappa_0..kappa_K`` from raw moments (``kappa_0 = 0``)."""
    K = len(mu) - 1
    kappa = [mu[0] * 0] + [None] * K
    for n in range(1, K + 1):
        s = mu[n]
        for k in range(1, n):
            s = s - math.comb(n - 1, k - 1) * kappa[k] * mu[n - k]
        kappa[n] = s
    return kappa


# -- family implementations -------------------------------------------------


class _Family:
    name = ""
    symmetric = False
    code = -1

    def __init__(self, **params):
        self.params = params

    # exact (Fraction) moments or None
    def exact_moments(self, K: int):
        return None

    def mp_moments(self, K: int) -> list:
        ex = self.exact_moments(K)
        if ex is None:
            raise NotImplementedError
        return [mpmath.mpf(v.numerator) / v.denominator for v in map(Fraction, ex)]

    def eta(self) -> float:
        raise NotImplementedError

    def mgf(self, z: np.ndarray, k: int) -> np.ndarray:
        raise NotImplementedError

    def psi(self, t: float) -> float:
        raise NotImplementedError

    def dpsi(self, t: float) -> float:
        raise NotImplementedError

    def d2psi(self, t: float) -> float:
        raise NotImplementedError

    def mgf_taylor_mp(self, theta: float, order: int) -> list:
        """``gamma^(j)(theta)/j!`` for ``j = 0..order`` at real ``theta``, in mpmath."""
        raise NotImplementedError

    def sampler_params(self, theta: float) -> tuple[float, ...]:
        raise NotImplementedError


class _Gaussian(_Family):
    name = "gaussian"
    symmetric = True
    code = 0

    def exact_moments(self, K):
        mu = []
        for n in range(K + 1):
            mu.append(Fraction(0) if n % 2 else Fraction(math.prod(range(n - 1, 0, -2)) if n else 1))
        return mu

    def eta(self):
        return STRIP_CAP

    def mgf(self, z, k):
        p_prev, p = np.zeros_like(z), np.ones_like(z)
        for n in range(k):
            p_prev, p = p, z * p + n * p_prev
        return np.exp(0.5 * z * z) * p

    def psi(self, t):
        return 0.5 * t * t

    def dpsi(self, t):
        return t

    def d2psi(self, t):
        return 1.0

    def mgf_taylor_mp(self, theta, order):
        t = mpmath.mpf(theta)
        p_prev, p = mpmath.mpf(0), mpmath.mpf(1)
        out = []
        e = mpmath.exp(t * t / 2)
        for n in range(order + 1):
            out.append(e * p / mpmath.factorial(n))
            p_prev, p = p, t * p + n * p_prev
        return out

    def sampler_params(self, theta):
        return (theta,)


class _ShiftedGamma(_Family):
    """``X = (G - k)/sqrt(k)`` with ``G ~ Gamma(k, 1)``; ``k = 1`` is the centered exponential."""

    code = 1

    def __init__(self, shape: float, name: str = "shifted_gamma"):
        super().__init__(shape=shape)
        if not shape >= 1:
            raise ModelError("shifted_gamma requires shape >= 1 (kernel Taylor radius is sqrt(shape))")
        self.k = float(shape)
        self.a = math.sqrt(self.k)
        self.name = name
        root = math.isqrt(int(shape)) if float(shape).is_integer() else None
        self._exact_a = Fraction(root) if root is not None and root * root == int(shape) else None

    def _kappas(self, K, exact):
        k = Fraction(self.k).limit_denominator() if exact else mpmath.mpf(self.k)
        a = self._exact_a if exact else mpmath.sqrt(mpmath.mpf(self.k))
        kap = [k * 0, k * 0]
        for n in range(2, K + 1):
            kap.append(k * math.factorial(n - 1) / a**n)
        return kap

    def exact_moments(self, K):
        if self._exact_a is None:
            return None
        return moments_from_cumulants(self._kappas(K, True))

    def mp_moments(self, K):
        with mpmath.workdps(MP_DPS):
            return moments_from_cumulants(self._kappas(K, False))

    def eta(self):
        return min(self.a, STRIP_CAP)

    def mgf(self, z, k):
        a, kk = self.a, self.k
        w = 1.0 / (1.0 - z / a)
        base = np.exp(-a * z) * w**kk
        acc = np.zeros_like(z)
        wpow = np.ones_like(z)
        rising = 1.0
        for m in range(k + 1):
            acc = acc + math.comb(k, m) * (-a) ** (k - m) * rising * a ** (-m) * wpow
            wpow = wpow * w
            rising *= kk + m
        return base * acc

    def psi(self, t):
        return -self.k * _log1pmx(-t / self.a)

    def dpsi(self, t):
        return self.a * t / (self.a - t)

    def d2psi(self, t):
        return self.a**2 / (self.a - t) ** 2

    def mgf_taylor_mp(self, theta, order):
        with mpmath.workdps(MP_DPS):
            a = mpmath.sqrt(mpmath.mpf(self.k))
            t = mpmath.mpf(theta)
            c = a - t
            pref = mpmath.exp(-a * t) * (1 - t / a) ** (-mpmath.mpf(self.k))
            e = Series([(-a) ** n / mpmath.factorial(n) for n in range(order + 1)], mode="float")
            r = [mpmath.mpf(1)]
            for m in range(1, order + 1):
                r.append(r[-1] * (mpmath.mpf(self.k) + m - 1) / (m * c))
            out = e * Series(r, mode="float")
            return [pref * v for v in out.coeffs]

    def sampler_params(self, theta):
        return (self.k, 1.0 - theta / self.a, self.a)


class _Laplace(_Family):
    name = "laplace"
    symmetric = True
    code = 2

    def exact_moments(self, K):
        return [Fraction(0) if n % 2 else Fraction(math.factorial(n), 2 ** (n // 2)) for n in range(K + 1)]

    def eta(self):
        return 1.0

    def mgf(self, z, k):
        s = math.sqrt(2.0)
        c = math.factorial(k) / 2 * s ** (-k)
        return c * ((1 - z / s) ** (-k - 1) + (-1) ** k * (1 + z / s) ** (-k - 1))

    def psi(self, t):
        return -math.log1p(-0.5 * t * t)

    def dpsi(self, t):
        return t / (1 - 0.5 * t * t)

    def d2psi(self, t):
        return (1 + 0.5 * t * t) / (1 - 0.5 * t * t) ** 2

    def mgf_taylor_mp(self, theta, order):
        with mpmath.workdps(MP_DPS):
            s = mpmath.sqrt(2)
            t = mpmath.mpf(theta)
            out = []
            for n in range(order + 1):
                out.append((s / (s - t) * (1 / (s - t)) ** n + s / (s + t) * (-1 / (s + t)) ** n) / 2)
            return out

    def sampler_params(self, theta):
        return (theta,)


class _Uniform(_Family):
    name = "centered_uniform"
    symmetric = True
    code = 3
    _SERIES_RADIUS = 3.0

    def exact_moments(self, K):
        return [Fraction(0) if n % 2 else Fraction(3 ** (n // 2), n + 1) for n in range(K + 1)]

    def eta(self):
        return STRIP_CAP

    def mgf(self, z, k):
        a = math.sqrt(3.0)
        z = np.asarray(z, dtype=complex)
        out = np.empty_like(z)
        small = np.abs(a * z) < self._SERIES_RADIUS
        if np.any(small):
            zs = z[small]
            acc = np.zeros_like(zs)
            term = np.ones_like(zs)
            for m in range(80):
                n = k + m
                if n % 2 == 0:
                    acc = acc + term * (a**n / (n + 1))
                term = term * zs / (m + 1)
            out[small] = acc
        big = ~small
        if np.any(big):
            zb = z[big]

            def prim(x):
                s = np.zeros_like(zb)
                ff = 1.0
                for j in range(k + 1):
                    s = s + (-1) ** j * ff * x ** (k - j) / zb ** (j + 1)
                    ff *= k - j
                return np.exp(zb * x) * s

            out[big] = (prim(a) - prim(-a)) / (2 * a)
        return out

    def psi(self, t):
        return _log_sinhc(math.sqrt(3.0) * t)

    def dpsi(self, t):
        a = math.sqrt(3.0)
        return a * _langevin(a * t)

    def d2psi(self, t):
        a = math.sqrt(3.0)
        return 3.0 * _langevin_prime(a * t)

    def mgf_taylor_mp(self, theta, order):
        with mpmath.workdps(MP_DPS):
            a = mpmath.sqrt(3)
            t = mpmath.mpf(theta)
            out = []
            for j in range(order + 1):
                s = mpmath.mpf(0)
                tm = mpmath.mpf(1)
                for m in range(0, 400):
                    n = j + m
                    if n % 2 == 0:
                        term = a**n / (n + 1) * tm
                        s += term
                        if m > 10 and abs(term) < mpmath.mpf(10) ** (-MP_DPS) * abs(s):
                            break
                    tm = tm * t / (m + 1)
                out.append(s / mpmath.factorial(j))
            return out

    def sampler_params(self, theta):
        return (math.sqrt(3.0), theta)


# -- the model --------------------------------------------------------------


@dataclass(frozen=True)
class IncrementModel:
    """A standardized increment law (mean 0, variance 1)."""

    family: str
    shape: float | None
    eta: float
    moments: tuple[float, ...]
    cumulants: tuple[float, ...]
    exact_moments: tuple[Fraction, ...] | None
    symmetric: bool
    nonlattice_min: float
    spec: str
    _impl: _Family = field(repr=False, compare=False)

    # -- moment tables --------------------------------------------------------
    def mp_moments(self, K: int) -> list:
        return list(_mp_moment_table(self._impl_key, K))

    def moment_table(self, K: int) -> tuple:
        """``mu_0..mu_K``: exact ``Fraction`` values when available, else floats."""
        if self.exact_moments is not None and len(self.exact_moments) > K:
            return self.exact_moments[: K + 1]
        ex = self._impl.exact_moments(K)
        if ex is not None:
            return tuple(ex)
        return tuple(float(v) for v in self.mp_moments(K))

    def cumulant_table(self, K: int) -> tuple:
        return tuple(cumulants_from_moments(list(self.moment_table(K))))

    @property
    def _impl_key(self):
        return (self.family, self.shape)

    # -- analytic functions ---------------------------------------------------
    def mgf(self, z, k: int = 0):
        """``gamma^(k)(z) = E[X^k exp(zX)]`` for complex ``z`` in the strip."""
        z = np.asarray(z, dtype=complex)
        if np.any(np.abs(z.real) >= self.eta):
            raise StripError(f"|Re z| must be < {self.eta} for {self.spec}")
        return self._impl.mgf(z, k)

    def char(self, lam) -> np.ndarray:
        """Characteristic function ``g(lambda) = gamma(i lambda)``."""
        return self._impl.mgf(1j * np.asarray(lam, dtype=float), 0)

    def psi(self, theta: float) -> float:
        self._check_real(theta)
        return self._impl.psi(theta)

    def dpsi(self, theta: float) -> float:
        self._check_real(theta)
        return self._impl.dpsi(theta)

    def d2psi(self, theta: float) -> float:
        self._check_real(theta)
        return self._impl.d2psi(theta)

    def phi(self, theta: float) -> float:
        return math.exp(self.psi(theta))

    def mgf_taylor(self, theta: float, order: int) -> list:
        """Taylor coefficients ``gamma^(j)(theta)/j!`` (mpmath numbers)."""
        self._check_real(theta)
        return list(_mp_mgf_taylor(self._impl_key, float(theta), order))

    def _check_real(self, theta):
        if not abs(theta) < self.eta:
            raise StripError(f"theta={theta} outside (-{self.eta}, {self.eta}) for {self.spec}")

    def sampler(self, theta: float) -> tuple[int, tuple[float, ...]]:
        self._check_real(theta)
        return self._impl.code, tuple(float(p) for p in self._impl.sampler_params(theta))


_IMPLS: dict = {}


def _impl_for(key) -> _Family:
    if key not in _IMPLS:
        family, shape = key
        if family == "gaussian":
            _IMPLS[key] = _Gaussian()
        elif family == "centered_exponential":
            _IMPLS[key] = _ShiftedGamma(1.0, name="centered_exponential")
        elif family == "shifted_gamma":
            _IMPLS[key] = _ShiftedGamma(shape)
        elif family == "laplace":
            _IMPLS[key] = _Laplace()
        elif family == "centered_uniform":
            _IMPLS[key] = _Uniform()
        else:
            raise ModelError(f"unsupported family {family!r}")
    return _IMPLS[key]


@lru_cache(maxsize=64)
def _mp_moment_table(key, K):
    with mpmath.workdps(MP_DPS):
        return tuple(_impl_for(key).mp_moments(K))


@lru_cache(maxsize=256)
def _mp_mgf_taylor(key, theta, order):
    with mpmath.workdps(MP_DPS):
        return tuple(_impl_for(key).mgf_taylor_mp(theta, order))


# -- construction -------------------------------------------------------------

_SPEC_RE = re.compile(r"^\s*([a-z_]+)\s*(?::\s*(.*))?$")


def parse_distribution(spec: str | Mapping[str, Any]) -> tuple[str, dict]:
    """Parse ``"shifted_gamma:shape=4"`` or ``{"family": ..., "shape": ...}``."""
    if isinstance(spec, Mapping):
        params = dict(spec)
        family = str(params.pop("family", "")).strip().lower()
    else:
        m = _SPEC_RE.match(str(spec).lower())
        if not m:
            raise ModelError(f"cannot parse distribution spec {spec!r}")
        family, rest = m.group(1), m.group(2)
        params = {}
        if rest:
            for item in rest.split(","):
                if "=" not in item:
                    raise ModelError(f"bad parameter {item!r} in {spec!r}")
                k, v = item.split("=", 1)
                try:
                    params[k.strip()] = float(v)
                except ValueError as exc:
                    raise ModelError(f"parameter {k.strip()!r} must be numeric") from exc
    if family in LATTICE_NAMES:
        raise LatticeError(f"{family!r} is a lattice law; the expansion needs strongly nonlattice increments")
    if family not in FAMILIES:
        raise ModelError(f"unsupported family {family!r}; choose one of {', '.join(FAMILIES)}")
    allowed = {"shape"} if family == "shifted_gamma" else set()
    extra = set(params) - allowed
    if extra:
        raise ModelError(f"unexpected parameters {sorted(extra)} for {family}")
    if family == "shifted_gamma" and "shape" not in params:
        raise ModelError("shifted_gamma needs shape=<value>")
    return family, params


def make_model(spec: str | Mapping[str, Any], moment_order: int = 24) -> IncrementModel:
    """Build a standardized model and run the strong-nonlattice gate."""
    family, params = parse_distribution(spec)
    shape = float(params["shape"]) if "shape" in params else None
    key = (family, shape)
    impl = _impl_for(key)
    exact = impl.exact_moments(moment_order)
    if exact is not None:
        moments = tuple(float(v) for v in exact)
        exact = tuple(exact)
        cumulants = tuple(float(v) for v in cumulants_from_moments(list(exact)))
    else:
        mp = _mp_moment_table(key, moment_order)
        moments = tuple(float(v) for v in mp)
        with mpmath.workdps(MP_DPS):
            cumulants = tuple(float(v) for v in cumulants_from_moments(list(mp)))
    label = family if shape is None else f"{family}:shape={shape:g}"
    grid = np.linspace(NONLATTICE_GRID[0], NONLATTICE_GRID[1], 40001)
    gap = float(np.min(np.abs(1.0 - impl.mgf(1j * grid, 0))))
    if not gap > NONLATTICE_FLOOR:
        raise NonlatticeGateError(f"strong-nonlattice gate failed for {label}: min |1-g| = {gap:.3e}")
    return IncrementModel(
        family=family,
        shape=shape,
        eta=impl.eta(),
        moments=moments,
        cumulants=cumulants,
        exact_moments=exact,
        symmetric=impl.symmetric,
        nonlattice_min=gap,
        spec=label,
        _impl=impl,
    )


def mgf_eval(model: IncrementModel, k: int, z):
    return model.mgf(z, k)


# -- conjugate points ---------------------------------------------------------


def conjugate_theta1(model: IncrementModel, delta: float) -> float:
    """Positive root ``theta1`` of ``psi(theta1) = psi(theta1 - delta)``."""
    if not delta > 0:
        raise ValueError("delta must be positive")
    eta = model.eta
    # keep theta1 - delta strictly inside the strip
    lo = max(0.0, delta - eta + 1e-12)
    hi = min(delta, eta)
    hi = hi - 1e-12 if hi >= eta else hi

    def h(t):
        return model.psi(t) - model.psi(t - delta)

    try:
        f_lo, f_hi = h(lo), h(hi)
    except StripError as exc:
        raise StripError(f"delta={delta} too large for {model.spec}") from exc
    if f_lo > 0 or f_hi < 0:
        raise StripError(f"no conjugate root for delta={delta} inside the strip of {model.spec}")
    t1 = brentq(h, lo, hi, xtol=1e-16, rtol=4 * np.finfo(float).eps, maxiter=500)
    return float(t1)


def conjugate_theta0(model: IncrementModel, theta1: float) -> float:
    """Negative root ``theta0`` of ``psi(theta0) = psi(theta1)``."""
    if not theta1 > 0:
        raise ValueError("theta1 must be positive")
    target = model.psi(theta1)
    lo = -model.eta + 1e-12
    if model.psi(lo) < target:
        raise StripError(f"no conjugate theta0 for theta1={theta1} inside the strip")
    return float(brentq(lambda t: model.psi(t) - target, lo, 0.0, xtol=1e-16, rtol=4 * np.finfo(float).eps))


def theta0_for_drift(model: IncrementModel, mu: float) -> float:
    """``theta0 < 0`` with ``psi'(theta0) = -mu``."""
    if not mu > 0:
        raise ValueError("drift mu must be positive")
    lo = -model.eta + 1e-12
    if model.dpsi(lo) > -mu:
        raise StripError(f"drift {mu} not reachable inside the strip of {model.spec}")
    return float(brentq(lambda t: model.dpsi(t) + mu, lo, 0.0, xtol=1e-16, rtol=4 * np.finfo(float).eps))


def theta1_series(model: IncrementModel, order: int, exact: bool | None = None) -> Series:
    """Series ``theta1(Delta)`` by reverting ``Delta(theta1) = theta1 - theta0(theta1)``.

    ``theta0(theta1)`` solves ``psi(theta0) = psi(theta1)`` as a formal series:
    writing ``theta0 = theta1 - D`` gives the fixed point
    ``D = 2 t + 2 sum_{n>=3} kappa_n P_n(t, D)/n!`` with
    ``P_n = (t^n - (t - D)^n)/D``, and each pass fixes one more order.
    """
    if order < 1:
        raise ValueError("order must be >= 1")
    kap = model.cumulant_table(order + 2)
    if exact is None:
        exact = all(isinstance(v, Fraction) for v in kap)
    mode = "exact" if exact else "float"
    if not exact:
        kap = [float(v) for v in kap]
    one = Fraction(1) if exact else 1.0
    t = Series.variable(order, label="theta1", mode=mode)
    D = t * 2
    unit = Series.constant(one, order, label="theta1", mode=mode)
    for _ in range(order + 1):
        acc = Series.constant(one * 0, order, label="theta1", mode=mode)
        for n in range(3, order + 2):
            if kap[n] == 0:
                continue
            P = Series.constant(one * 0, order, label="theta1", mode=mode)
            for i in range(1, n + 1):
                term = (t ** (n - i)) * (D ** (i - 1)) * (math.comb(n, i) * (-1) ** (i + 1))
                P = P + term
            fac = Fraction(1, math.factorial(n)) if exact else 1.0 / math.factorial(n)
            acc = acc + P * (kap[n] * fac)
        D = t * 2 + acc * 2
    del unit
    theta = ps_revert(D)
    return Series(theta.coeffs, label="delta", mode=mode)


# -- sampling -----------------------------------------------------------------


def sample_tilted(model: IncrementModel, theta: float, seed: int, n: int) -> np.ndarray:
    """``n`` i.i.d. draws from ``exp(theta x - psi(theta)) P(X in dx)``."""
    if n < 1:
        raise ValueError("n must be >= 1")
    from . import _mc

    code, params = model.sampler(theta)
    return _mc.backend().sample(code, np.asarray(params, dtype=float), int(n), int(seed) & (2**64 - 1), 0)
