"""Truncated power series in one and two variables.

Coefficients are plain Python scalars, so the same code runs on exact
rationals (``fractions.Fraction``) for testing the algebra and on binary64
(``float``/``complex``) or ``mpmath`` numbers in the numerical pipeline.  A
series is either ``"exact"`` or ``"float"``; combining the two raises.

Truncation is explicit: ``Series.order`` is the highest power carried.  An
operation on inputs of different order works at the smaller order and notes
the truncation in ``Series.diagnostics``.
"""

from __future__ import annotations

from fractions import Fraction
from numbers import Number
from typing import Callable, Iterable, Sequence

__all__ = [
    "BiSeries",
    "Series",
    "SeriesError",
    "ps_arith",
    "ps_compose",
    "ps_log_exp",
    "ps_revert",
]


class SeriesError(ValueError):
    """Raised on ill-posed series operations (zero divisor, bad constant term)."""


def _is_exact(c) -> bool:
    return isinstance(c, (int, Fraction)) and not isinstance(c, bool)


def _mode_of(coeffs: Sequence) -> str:
    return "exact" if all(_is_exact(c) for c in coeffs) else "float"


class Series:
    """Power series ``c[0] + c[1] x + ... + c[N] x**N + O(x**(N+1))``."""

    __slots__ = ("_c", "label", "mode", "diagnostics")

    def __init__(
        self,
        coeffs: Iterable,
        order: int | None = None,
        label: str = "x",
        mode: str | None = None,
        diagnostics: tuple[str, ...] = (),
    ):
        c = list(coeffs)
        if order is None:
            order = len(c) - 1
        if order < 0:
            raise SeriesError("series order must be >= 0")
        zero = Fraction(0) if c and _mode_of(c) == "exact" else 0.0
        if not c:
            zero = Fraction(0) if mode == "exact" else 0.0
        c = c[: order + 1] + [zero] * (order + 1 - len(c))
        inferred = _mode_of(c)
        if mode is None:
            mode = inferred
        elif mode == "exact" and inferred != "exact":
            raise SeriesError("exact-mode series given non-rational coefficients")
        if mode == "exact":
            c = [Fraction(v) for v in c]
        self._c = tuple(c)
        self.label = label
        self.mode = mode
        self.diagnostics = diagnostics

    # -- construction helpers -------------------------------------------------
    @classmethod
    def variable(cls, order: int, label: str = "x", mode: str = "float") -> "Series":
        one = Fraction(1) if mode == "exact" else 1.0
        zero = one * 0
        return cls([zero, one], order=order, label=label, mode=mode)

    @classmethod
    def constant(cls, value, order: int, label: str = "x", mode: str | None = None) -> "Series":
        return cls([value], order=order, label=label, mode=mode)

    def _like(self, coeffs, order=None, diagnostics=None) -> "Series":
        return Series(
            coeffs,
            order=self.order if order is None else order,
            label=self.label,
            mode=self.mode,
            diagnostics=self.diagnostics if diagnostics is None else diagnostics,
        )

    # -- container protocol ---------------------------------------------------
    @property
    def order(self) -> int:
        return len(self._c) - 1

    @property
    def coeffs(self) -> tuple:
        return self._c

    def __len__(self) -> int:
        return len(self._c)

    def __iter__(self):
        return iter(self._c)

    def __getitem__(self, k):
        return self._c[k]

    def __repr__(self) -> str:
        body = " + ".join(f"({c})*{self.label}^{k}" for k, c in enumerate(self._c))
        return f"Series[{self.mode}]({body} + O({self.label}^{self.order + 1}))"

    def __eq__(self, other) -> bool:
        if not isinstance(other, Series):
            return NotImplemented
        return self._c == other._c and self.label == other.label

    __hash__ = None

    # -- helpers --------------------------------------------------------------
    def _coerce(self, other) -> tuple["Series", "Series"]:
        if isinstance(other, Series):
            if other.label != self.label:
                raise SeriesError(f"variable mismatch: {self.label!r} vs {other.label!r}")
            if other.mode != self.mode:
                raise SeriesError(f"cannot mix {self.mode} and {other.mode} series")
            n = min(self.order, other.order)
            diag = self.diagnostics + tuple(d for d in other.diagnostics if d not in self.diagnostics)
            if self.order != other.order:
                diag = diag + (f"truncated to order {n} (inputs {self.order}, {other.order})",)
            a = Series(self._c[: n + 1], label=self.label, mode=self.mode, diagnostics=diag)
            b = Series(other._c[: n + 1], label=self.label, mode=self.mode, diagnostics=diag)
            return a, b
        if isinstance(other, Number) or hasattr(other, "__float__"):
            if self.mode == "exact" and not _is_exact(other):
                raise SeriesError("cannot mix exact series with a floating scalar")
            return self, self._like([other])
        raise TypeError(f"unsupported operand {type(other).__name__}")

    def truncate(self, order: int) -> "Series":
        if order > self.order:
            raise SeriesError(f"cannot raise order {self.order} to {order}")
        return self._like(self._c[: order + 1], order=order)

    def is_zero(self, tol: float = 0.0) -> bool:
        return all(abs(c) <= tol for c in self._c)

    # -- ring operations ------------------------------------------------------
    def __add__(self, other):
        a, b = self._coerce(other)
        return a._like([x + y for x, y in zip(a._c, b._c)])

    __radd__ = __add__

    def __neg__(self):
        return self._like([-x for x in self._c])

    def __sub__(self, other):
        a, b = self._coerce(other)
        return a._like([x - y for x, y in zip(a._c, b._c)])

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if not isinstance(other, Series):
            a, _ = self._coerce(other)
            return a._like([x * other for x in a._c])
        a, b = self._coerce(other)
        n = a.order
        ac, bc = a._c, b._c
        out = []
        for k in range(n + 1):
            s = ac[0] * bc[k]
            for i in range(1, k + 1):
                s = s + ac[i] * bc[k - i]
            out.append(s)
        return a._like(out)

    __rmul__ = __mul__

    def reciprocal(self) -> "Series":
        c0 = self._c[0]
        if c0 == 0:
            raise SeriesError("division by a series with zero constant term")
        inv0 = (Fraction(1) / c0) if self.mode == "exact" else 1 / c0
        out = [inv0]
        for k in range(1, self.order + 1):
            s = self._c[1] * out[k - 1]
            for i in range(2, k + 1):
                s = s + self._c[i] * out[k - i]
            out.append(-s * inv0)
        return self._like(out)

    def __truediv__(self, other):
        if isinstance(other, Series):
            a, b = self._coerce(other)
            return a * b.reciprocal()
        if other == 0:
            raise SeriesError("division by zero scalar")
        if self.mode == "exact":
            return self._like([Fraction(x) / other for x in self._c])
        return self._like([x / other for x in self._c])

    def __rtruediv__(self, other):
        return self._like([other]) / self

    def __pow__(self, k: int):
        if not isinstance(k, int) or k < 0:
            raise SeriesError("only non-negative integer powers are supported")
        one = Fraction(1) if self.mode == "exact" else 1.0
        result = self._like([one])
        base = self
        while k:
            if k & 1:
                result = result * base
            base = base * base
            k >>= 1
        return result

    # -- calculus -------------------------------------------------------------
    def derivative(self) -> "Series":
        """Termwise derivative; the result has order ``N - 1``."""
        if self.order == 0:
            return self._like([self._c[0] * 0], order=0)
        return self._like([k * self._c[k] for k in range(1, self.order + 1)], order=self.order - 1)

    def integral(self, constant=0) -> "Series":
        """Termwise antiderivative truncated back to order ``N``."""
        if self.mode == "exact":
            body = [Fraction(self._c[k]) / (k + 1) for k in range(self.order)]
        else:
            body = [self._c[k] / (k + 1) for k in range(self.order)]
        return self._like([constant] + body)

    def __call__(self, x):
        """Evaluate the truncated polynomial at ``x`` (Horner)."""
        acc = self._c[-1] * 1
        for c in reversed(self._c[:-1]):
            acc = acc * x + c
        return acc

    evaluate = __call__

    def shift_down(self, k: int) -> "Series":
        """Divide by ``x**k``; the dropped low coefficients must vanish."""
        if any(c != 0 for c in self._c[:k]):
            raise SeriesError(f"series not divisible by {self.label}^{k}")
        return self._like(self._c[k:], order=self.order - k)

    # -- transcendental -------------------------------------------------------
    def log(self) -> "Series":
        if self._c[0] != 1:
            raise SeriesError("log requires constant term 1")
        return _log_via_recurrence(self)

    def exp(self) -> "Series":
        if self._c[0] != 0:
            raise SeriesError("exp requires constant term 0")
        a = self._c
        one = Fraction(1) if self.mode == "exact" else 1.0
        out = [one]
        for n in range(1, self.order + 1):
            s = 0 * one
            for k in range(1, n + 1):
                s = s + k * a[k] * out[n - k]
            out.append(s / n if self.mode != "exact" else Fraction(s) / n)
        return self._like(out)

    def sqrt(self) -> "Series":
        """Principal square root of a series with constant term 1."""
        if self._c[0] != 1:
            raise SeriesError("sqrt requires constant term 1")
        half = Fraction(1, 2) if self.mode == "exact" else 0.5
        return (self.log() * half).exp()

    # -- composition ----------------------------------------------------------
    def compose(self, inner: "Series") -> "Series":
        return ps_compose(self, inner)

    def revert(self) -> "Series":
        return ps_revert(self)


def _log_via_recurrence(a: Series) -> Series:
    # b = log a  <=>  a b' = a'  ;  n b_n = n a_n - sum_{k=1}^{n-1} k b_k a_{n-k}
    c = a.coeffs
    exact = a.mode == "exact"
    zero = c[0] * 0
    b = [zero]
    for n in range(1, a.order + 1):
        s = n * c[n]
        for k in range(1, n):
            s = s - k * b[k] * c[n - k]
        b.append(Fraction(s) / n if exact else s / n)
    return a._like(b)


def ps_arith(a: Series, b: Series, op: str) -> Series:
    """Coefficientwise ``add``/``sub``/``mul``/``div`` truncated to the smaller order."""
    ops: dict[str, Callable[[Series, Series], Series]] = {
        "add": Series.__add__,
        "sub": Series.__sub__,
        "mul": Series.__mul__,
        "div": Series.__truediv__,
    }
    if op not in ops:
        raise SeriesError(f"unknown op {op!r}")
    return ops[op](a, b)


def ps_log_exp(a: Series, mode: str) -> Series:
    if mode == "log":
        return a.log()
    if mode == "exp":
        return a.exp()
    raise SeriesError(f"unknown mode {mode!r}")


def ps_compose(outer: Series, inner: Series) -> Series:
    """Coefficients of ``outer(inner(y))``; ``inner`` must have zero constant term.

    The result lives in the variable of ``inner``.
    """
    if inner[0] != 0:
        raise SeriesError("inner series must have zero constant term")
    if outer.mode != inner.mode:
        raise SeriesError(f"cannot mix {outer.mode} and {inner.mode} series")
    n = min(outer.order, inner.order)
    diag = outer.diagnostics + inner.diagnostics
    if outer.order != inner.order:
        diag = diag + (f"composition truncated to order {n}",)
    inner_n = Series(inner.coeffs[: n + 1], label=inner.label, mode=inner.mode, diagnostics=diag)
    acc = inner_n._like([outer[n]])
    for k in range(n - 1, -1, -1):
        acc = acc * inner_n + outer[k]
    return acc


def ps_revert(a: Series) -> Series:
    """Compositional inverse of ``a`` (zero constant term, nonzero linear term).

    Newton iteration on formal series, doubling the correct order each step.
    """
    if a[0] != 0:
        raise SeriesError("reversion requires zero constant term")
    if a.order < 1 or a[1] == 0:
        raise SeriesError("reversion requires a nonzero linear coefficient")
    n = a.order
    exact = a.mode == "exact"
    inv1 = Fraction(1) / a[1] if exact else 1 / a[1]
    zero = a[0] * 0
    one = Fraction(1) if exact else 1.0
    y = Series([zero, one], order=n, label=a.label, mode=a.mode)
    g = Series([zero, inv1], order=n, label=a.label, mode=a.mode)
    da = a.derivative()
    prec = 1
    while prec < n:
        prec = min(2 * prec, n)
        gp = g.truncate(prec)
        ap = a.truncate(prec)
        resid = ps_compose(ap, gp) - y.truncate(prec)
        slope = ps_compose(da.truncate(prec), gp) if prec <= da.order else ps_compose(
            Series(list(da.coeffs) + [zero], order=prec, label=a.label, mode=a.mode), gp
        )
        step = resid / slope
        g_new = gp - step
        g = Series(list(g_new.coeffs) + [zero] * (n - prec), order=n, label=a.label, mode=a.mode)
    return Series(g.coeffs, order=n, label=a.label, mode=a.mode, diagnostics=a.diagnostics)


class BiSeries:
    """Rectangular truncated series ``sum_{j<=Ntheta, k<=Nb} c[j][k] t^j b^k``."""

    __slots__ = ("_c", "labels", "mode")

    def __init__(self, coeffs: Sequence[Sequence], labels: tuple[str, str] = ("theta", "b")):
        rows = [list(r) for r in coeffs]
        if not rows or any(len(r) != len(rows[0]) for r in rows):
            raise SeriesError("BiSeries needs a non-empty rectangular coefficient grid")
        self._c = rows
        self.labels = labels
        self.mode = "exact" if all(_is_exact(v) for r in rows for v in r) else "float"

    @classmethod
    def zeros(cls, n_theta: int, n_b: int, labels=("theta", "b"), mode: str = "float") -> "BiSeries":
        z = Fraction(0) if mode == "exact" else 0.0
        return cls([[z] * (n_b + 1) for _ in range(n_theta + 1)], labels=labels)

    @property
    def orders(self) -> tuple[int, int]:
        return len(self._c) - 1, len(self._c[0]) - 1

    def __getitem__(self, jk: tuple[int, int]):
        j, k = jk
        return self._c[j][k]

    def __setitem__(self, jk: tuple[int, int], value) -> None:
        j, k = jk
        self._c[j][k] = value

    def rows(self) -> list[list]:
        return [list(r) for r in self._c]

    def row(self, j: int) -> Series:
        return Series(self._c[j], label=self.labels[1])

    def column(self, k: int) -> Series:
        return Series([r[k] for r in self._c], label=self.labels[0])

    def partial_b(self) -> "BiSeries":
        n_t, n_b = self.orders
        if n_b == 0:
            raise SeriesError("cannot differentiate an order-0 b-series")
        return BiSeries([[k * r[k] for k in range(1, n_b + 1)] for r in self._c], labels=self.labels)

    def __call__(self, theta, b):
        return sum(self._c[j][k] * theta**j * b**k for j in range(len(self._c)) for k in range(len(self._c[0])))

    def substitute(self, theta: Series, b: Series) -> Series:
        """Compose with ``theta = theta(D)``, ``b = b(D)`` (both vanishing at 0)."""
        if theta[0] != 0 or b[0] != 0:
            raise SeriesError("substituted series must vanish at the origin")
        n = min(theta.order, b.order)
        theta = theta.truncate(n)
        b = b.truncate(n)
        n_t, n_b = self.orders
        one = Fraction(1) if theta.mode == "exact" else 1.0
        t_pows = [theta._like([one])]
        for _ in range(n_t):
            t_pows.append(t_pows[-1] * theta)
        b_pows = [b._like([one])]
        for _ in range(n_b):
            b_pows.append(b_pows[-1] * b)
        acc = theta._like([one * 0])
        for j in range(n_t + 1):
            for k in range(n_b + 1):
                if j + k > n:
                    continue
                c = self._c[j][k]
                if c == 0:
                    continue
                acc = acc + t_pows[j] * b_pows[k] * c
        return acc
