"""Time the compiled Monte Carlo core against the numpy fallback.

Usage: python3 benchmarks/bench_mc.py [--n N] [--repeat R]
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from corrdiff import _mc
from corrdiff.increments import conjugate_theta1, make_model


def _best(fn, repeat: int) -> float:
    times = []
    for _ in range(repeat):
        t = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t)
    return min(times)


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=20_000)
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--dist", default="gaussian")
    args = ap.parse_args()

    m = make_model(args.dist)
    t1 = conjugate_theta1(m, 0.2)
    code, p1 = m.sampler(t1)
    code0, p0 = m.sampler(t1 - 0.2)
    p1, p0 = np.asarray(p1, dtype=float), np.asarray(p0, dtype=float)
    n = args.n
    jobs = {
        "sample": lambda b: b.sample(code, p1, 50 * n, 1, 1),
        "first_passage(x=20)": lambda b: b.first_passage(code, p1, 20.0, n, 1, 1, 10**7),
        "lindley_cycles": lambda b: b.lindley_cycles(code0, p0, n, 1, 4, 10**7),
    }
    names = _mc.available()
    print(f"dist={args.dist} n={n} best of {args.repeat}")
    print(f"{'kernel':<22}" + "".join(f"{b:>12}" for b in names) + ("     speedup" if len(names) > 1 else ""))
    for label, job in jobs.items():
        ts = [_best(lambda: job(_mc.backend(b)), args.repeat) for b in names]
        row = f"{label:<22}" + "".join(f"{t:>11.3f}s" for t in ts)
        if len(ts) > 1:
            row += f"{ts[-1] / ts[0]:>11.1f}x"
        print(row)


if __name__ == "__main__":
    main()
