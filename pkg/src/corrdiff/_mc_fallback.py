"""Pure numpy random-walk kernels (used when the compiled core is unavailable).

Randomness is counter based: the ``c``-th uniform of path ``i`` is a fixed
function of ``(seed, stream, i, c)``, so results do not depend on how paths
are batched.  The compiled core implements the same recipe.
"""

from __future__ import annotations

import numpy as np

NAME = "numpy"

_M64 = np.uint64(0xFFFFFFFFFFFFFFFF)
_GOLD = np.uint64(0x9E3779B97F4A7C15)
_STREAM = np.uint64(0xD1B54A32D192ED03)
_C1 = np.uint64(0xBF58476D1CE4E5B9)
_C2 = np.uint64(0x94D049BB133111EB)
_TWO53 = 2.0**-53
_SQRT2 = float(np.sqrt(2.0))
_TWO_PI = 2.0 * np.pi


def _mix(z):
    z = (z ^ (z >> np.uint64(30))) * _C1
    z = (z ^ (z >> np.uint64(27))) * _C2
    return z ^ (z >> np.uint64(31))


def path_keys(seed: int, stream: int, idx: np.ndarray) -> np.ndarray:
    with np.errstate(over="ignore"):
        base = _mix(np.uint64(seed) ^ (np.uint64(stream) * _STREAM))
        return _mix(base + (idx.astype(np.uint64) + np.uint64(1)) * _GOLD)


def uniforms(keys: np.ndarray, counters: np.ndarray) -> np.ndarray:
    with np.errstate(over="ignore"):
        z = _mix(keys + (counters.astype(np.uint64) + np.uint64(1)) * _GOLD)
    return ((z >> np.uint64(11)).astype(np.float64) + 0.5) * _TWO53


def draw(code: int, params: np.ndarray, keys: np.ndarray, ctr: np.ndarray) -> np.ndarray:
    """One tilted increment per key; advances ``ctr`` in place."""
    if code == 0:
        u1 = uniforms(keys, ctr)
        u2 = uniforms(keys, ctr + 1)
        ctr += 2
        return params[0] + np.sqrt(-2.0 * np.log(u1)) * np.cos(_TWO_PI * u2)
    if code == 1:
        k, rate, a = params[0], params[1], params[2]
        return _gamma(k, keys, ctr) / rate / a - a
    if code == 2:
        th = params[0]
        u1 = uniforms(keys, ctr)
        u2 = uniforms(keys, ctr + 1)
        ctr += 2
        p_pos = (_SQRT2 + th) / (2.0 * _SQRT2)
        e = -np.log(u2)
        return np.where(u1 < p_pos, e / (_SQRT2 - th), -e / (_SQRT2 + th))
    if code == 3:
        a, th = params[0], params[1]
        u = uniforms(keys, ctr)
        ctr += 1
        if th == 0.0:
            return -a + 2.0 * a * u
        return -a + np.log1p(u * np.expm1(2.0 * a * th)) / th
    raise ValueError(f"unknown sampler code {code}")


def _gamma(k: float, keys, ctr):
    if k == int(k) and k <= 16:
        acc = np.zeros(keys.shape[0])
        for _ in range(int(k)):
            acc -= np.log(uniforms(keys, ctr))
            ctr += 1
        return acc
    # Marsaglia-Tsang, shape >= 1
    d = k - 1.0 / 3.0
    c = 1.0 / np.sqrt(9.0 * d)
    out = np.empty(keys.shape[0])
    todo = np.arange(keys.shape[0])
    while todo.size:
        kk, cc = keys[todo], ctr[todo]
        u1 = uniforms(kk, cc)
        u2 = uniforms(kk, cc + 1)
        u3 = uniforms(kk, cc + 2)
        ctr[todo] += 3
        x = np.sqrt(-2.0 * np.log(u1)) * np.cos(_TWO_PI * u2)
        v = (1.0 + c * x) ** 3
        ok = v > 0
        vs = np.where(ok, v, 1.0)
        ok &= np.log(u3) < 0.5 * x * x + d - d * vs + d * np.log(vs)
        out[todo[ok]] = d * v[ok]
        todo = todo[~ok]
    return out


def sample(code, params, n, seed, stream):
    keys = path_keys(seed, stream, np.arange(n))
    ctr = np.zeros(n, dtype=np.int64)
    return draw(code, np.asarray(params, dtype=float), keys, ctr)


def first_passage(code, params, level, n, seed, stream, max_steps):
    """``S`` at the first time it exceeds ``level`` (``S_0 = 0``) and the step count.

    Paths still below ``level`` after ``max_steps`` get ``steps = -1``.
    """
    params = np.asarray(params, dtype=float)
    keys = path_keys(seed, stream, np.arange(n))
    ctr = np.zeros(n, dtype=np.int64)
    s = np.zeros(n)
    steps = np.full(n, -1, dtype=np.int64)
    active = np.arange(n)
    for t in range(1, max_steps + 1):
        if active.size == 0:
            break
        c = ctr[active]
        s[active] += draw(code, params, keys[active], c)
        ctr[active] = c
        done = s[active] > level
        steps[active[done]] = t
        active = active[~done]
    return s, steps


def lindley_cycles(code, params, n, seed, stream, max_steps):
    """Regenerative cycles of ``W <- max(W + X, 0)`` started from ``W = 0``.

    Returns the sum of ``W`` over each cycle and the cycle length; length
    ``-1`` marks cycles truncated at ``max_steps``.
    """
    params = np.asarray(params, dtype=float)
    keys = path_keys(seed, stream, np.arange(n))
    ctr = np.zeros(n, dtype=np.int64)
    w = np.zeros(n)
    total = np.zeros(n)
    length = np.full(n, -1, dtype=np.int64)
    active = np.arange(n)
    for t in range(1, max_steps + 1):
        if active.size == 0:
            break
        c = ctr[active]
        w_new = w[active] + draw(code, params, keys[active], c)
        ctr[active] = c
        end = w_new <= 0.0
        length[active[end]] = t
        cont = active[~end]
        w[cont] = w_new[~end]
        total[cont] += w_new[~end]
        active = cont
    return total, length
