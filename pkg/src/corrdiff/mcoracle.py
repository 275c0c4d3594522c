"""Monte Carlo ground truth for crossing probabilities, overshoots and the maximum.

Each estimator draws its paths from a counter-based generator keyed by
``(seed, stream, path index)``, so results do not depend on chunking or on
which backend (compiled or numpy) runs the walk.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _mc
from .increments import IncrementModel, StripError, conjugate_theta1

__all__ = [
    "McBudgetError",
    "McEstimate",
    "crossing_prob_delta",
    "is_crossing_prob",
    "ladder_height_mean",
    "ladder_identity_check",
    "lindley_mean",
    "overshoot_transform",
    "z_stat",
]

MAX_STEPS = 10_000_000

# one substream per estimator so that no two share random numbers
_STREAM_CROSSING = 1
_STREAM_OVERSHOOT = 2
_STREAM_OVERSHOOT_DIAG = 3
_STREAM_LINDLEY = 4
_STREAM_LADDER = 5


class McBudgetError(RuntimeError):
    """A simulated path or cycle exceeded the step budget."""


@dataclass(frozen=True)
class McEstimate:
    mean: float
    stderr: float
    n: int
    seed: int
    tag: str
    diagnostics: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if not (math.isfinite(self.stderr) and self.stderr >= 0):
            raise ValueError("stderr must be finite and nonnegative")

    def as_dict(self) -> dict:
        return {"mean": self.mean, "stderr": self.stderr, "n": self.n, "seed": self.seed, "tag": self.tag,
                **({"diagnostics": self.diagnostics} if self.diagnostics else {})}


def z_stat(a: float, se_a: float, b: float, se_b: float = 0.0) -> float:
    """``|a - b| / sqrt(se_a^2 + se_b^2)``; ``inf`` for a nonzero gap with zero error."""
    s = math.hypot(se_a, se_b)
    d = abs(a - b)
    if s == 0.0:
        return 0.0 if d == 0.0 else math.inf
    return d / s


def _seed(seed: int) -> int:
    return int(seed) & (2**64 - 1)


def _walk(model: IncrementModel, theta: float, level: float, n: int, seed: int, stream: int, max_steps: int):
    code, params = model.sampler(theta)
    s, steps = _mc.backend().first_passage(
        code, np.asarray(params, dtype=float), float(level), int(n), _seed(seed), stream, int(max_steps)
    )
    if np.any(steps < 0):
        raise McBudgetError(f"{int(np.sum(steps < 0))} path(s) did not pass {level:g} within {max_steps} steps")
    return np.asarray(s), np.asarray(steps)


def _mean_se(v: np.ndarray) -> tuple[float, float]:
    n = v.size
    return float(v.mean()), float(v.std(ddof=1) / math.sqrt(n)) if n > 1 else 0.0


def _check_n(n):
    if int(n) < 2:
        raise ValueError("need at least 2 samples")


def is_crossing_prob(model: IncrementModel, theta0: float, x: float, n: int = 100_000, seed: int = 0,
                     max_steps: int = MAX_STEPS) -> McEstimate:
    """``P_{theta0}(M > x)`` as the mean of ``exp(-D S_tau(x))`` under the conjugate tilt ``theta1``."""
    _check_n(n)
    if not theta0 < 0:
        raise ValueError("theta0 must be negative")
    if not x >= 0:
        raise ValueError("x must be >= 0")
    from scipy.optimize import brentq

    target = model.psi(theta0)
    hi = model.eta - 1e-12
    if model.psi(hi) < target:
        raise StripError("no conjugate theta1 inside the strip")
    th1 = float(brentq(lambda t: model.psi(t) - target, 1e-300, hi, xtol=1e-16, rtol=4 * np.finfo(float).eps))
    delta = th1 - theta0
    s, steps = _walk(model, th1, x, n, seed, _STREAM_CROSSING, max_steps)
    m, se = _mean_se(np.exp(-delta * s))
    return McEstimate(m, se, int(n), int(seed), "crossing_prob",
                      {"delta": delta, "theta1": th1, "x": x, "mean_steps": float(steps.mean())})


def overshoot_transform(model: IncrementModel, theta: float, b: float, x: float = 50.0, n: int = 100_000,
                        seed: int = 0, diagnostic_x: float | None = 100.0,
                        max_steps: int = MAX_STEPS) -> McEstimate:
    """``E_theta exp(-b R(x))`` at a large level ``x``.

    A second run at ``diagnostic_x`` on an independent substream is stored in
    the diagnostics; a gap between the two flags that ``x`` is not yet large.
    """
    _check_n(n)
    if not 0 < theta < model.eta:
        raise StripError(f"theta={theta} outside (0, {model.eta})")
    if not b >= 0:
        raise ValueError("b must be >= 0")
    s, steps = _walk(model, theta, x, n, seed, _STREAM_OVERSHOOT, max_steps)
    if b == 0:
        return McEstimate(1.0, 0.0, int(n), int(seed), "overshoot_transform", {"x": x})
    m, se = _mean_se(np.exp(-b * (s - x)))
    diags = {"x": x, "mean_steps": float(steps.mean())}
    if diagnostic_x is not None:
        s2, _ = _walk(model, theta, diagnostic_x, n, seed, _STREAM_OVERSHOOT_DIAG, max_steps)
        m2, se2 = _mean_se(np.exp(-b * (s2 - diagnostic_x)))
        diags.update({"x_diag": diagnostic_x, "mean_diag": m2, "stderr_diag": se2, "z_diag": z_stat(m, se, m2, se2)})
    return McEstimate(m, se, int(n), int(seed), "overshoot_transform", diags)


def lindley_mean(model: IncrementModel, theta0: float, n: int = 10_000, seed: int = 0,
                 max_steps: int = MAX_STEPS) -> McEstimate:
    """``E_{theta0} M`` from ``n`` regenerative cycles of ``W <- max(W + X, 0)``.

    Ratio estimator ``sum(cycle W totals) / sum(cycle lengths)`` with a
    delta-method standard error.
    """
    _check_n(n)
    if not theta0 < 0 or model.dpsi(theta0) >= 0:
        raise ValueError("the walk needs negative drift (theta0 < 0)")
    code, params = model.sampler(theta0)
    tot, length = _mc.backend().lindley_cycles(
        code, np.asarray(params, dtype=float), int(n), _seed(seed), _STREAM_LINDLEY, int(max_steps)
    )
    tot, length = np.asarray(tot), np.asarray(length, dtype=float)
    if np.any(length < 0):
        raise McBudgetError(f"{int(np.sum(length < 0))} cycle(s) exceeded {max_steps} steps")
    lbar = length.mean()
    m = tot.mean() / lbar
    resid = tot - m * length
    se = float(resid.std(ddof=1) / (lbar * math.sqrt(n)))
    return McEstimate(float(m), se, int(n), int(seed), "lindley_mean", {"mean_cycle_length": float(lbar)})


def ladder_identity_check(model: IncrementModel, theta: float, b: float, n: int = 100_000, seed: int = 0,
                          x: float = 50.0, max_steps: int = MAX_STEPS) -> dict:
    """Both sides of ``E exp(-b R(inf)) = (1 - E exp(-b S_tau+)) / (b E S_tau+)`` under ``P_theta``."""
    if not b > 0:
        raise ValueError("b must be > 0")
    lhs = overshoot_transform(model, theta, b, x=x, n=n, seed=seed, diagnostic_x=None, max_steps=max_steps)
    s, _ = _walk(model, theta, 0.0, n, seed, _STREAM_LADDER, max_steps)
    e = np.exp(-b * s)
    ebar, sbar = e.mean(), s.mean()
    rhs = (1.0 - ebar) / (b * sbar)
    # delta method for g(e, s) = (1 - e)/(b s)
    grad = np.array([-1.0 / (b * sbar), -(1.0 - ebar) / (b * sbar * sbar)])
    cov = np.cov(np.vstack([e, s]))
    se = float(math.sqrt(max(grad @ cov @ grad, 0.0) / n))
    rhs_est = McEstimate(float(rhs), se, int(n), int(seed), "ladder_ratio", {"mean_ladder_height": float(sbar)})
    return {"lhs": lhs, "rhs": rhs_est, "z": z_stat(lhs.mean, lhs.stderr, rhs_est.mean, rhs_est.stderr)}


def ladder_height_mean(model: IncrementModel, theta: float, n: int = 100_000, seed: int = 0,
                       max_steps: int = MAX_STEPS) -> McEstimate:
    """``E_theta S_tau+`` by direct simulation to the first strict ascending ladder epoch."""
    _check_n(n)
    if not 0 < theta < model.eta:
        raise StripError(f"theta={theta} outside (0, {model.eta})")
    s, _ = _walk(model, theta, 0.0, n, seed, _STREAM_LADDER, max_steps)
    m, se = _mean_se(s)
    return McEstimate(m, se, int(n), int(seed), "ladder_height")


def crossing_prob_delta(model: IncrementModel, delta: float, x: float, n: int = 100_000, seed: int = 0) -> McEstimate:
    """:func:`is_crossing_prob` parameterized by the gap ``D = theta1 - theta0``."""
    t1 = conjugate_theta1(model, delta)
    return is_crossing_prob(model, t1 - delta, x, n, seed)
