"""Time the compiled kernels against the numpy fallback.

Usage: ``python3 benchmarks/bench_kernels.py [--repeat N]``
"""
from __future__ import annotations

import argparse
import timeit

import numpy as np

from gaplesswalk import _kernels_py

try:
    from gaplesswalk import _kernels
except ImportError:
    _kernels = None


def _cases(n_points: int, seed: int = 1):
    rng = np.random.default_rng(seed)
    return rng.uniform(-np.pi, np.pi, n_points), rng.uniform(-np.pi, np.pi, n_points)


def bench(repeat: int = 5) -> list[tuple[str, str, float]]:
    t1, t2 = _cases(2000)
    lo = np.linspace(-3.0, 2.0, 6)
    hi = lo + 0.8
    backends = [("python", _kernels_py)] + ([("cython", _kernels)] if _kernels is not None else [])
    rows = []
    for name, mod in backends:
        jobs = {
            "winding_and_gap (2000 points x 1024 k)": lambda m=mod: m.winding_and_gap(t1, t2, 1024),
            "arc_angle_sum (6 arcs x 2000 k)": lambda m=mod: m.arc_angle_sum(0.4, -1.1, lo, hi, 2000),
        }
        for label, fn in jobs.items():
            best = min(timeit.repeat(fn, number=1, repeat=repeat))
            rows.append((label, name, best))
    return rows


def main() -> None:
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--repeat", type=int, default=5)
    args = p.parse_args()
    rows = bench(args.repeat)
    print(f"{'kernel':42s} {'backend':8s} {'best [ms]':>10s}")
    for label, name, t in rows:
        print(f"{label:42s} {name:8s} {1e3 * t:10.2f}")
    if _kernels is None:
        print("compiled extension not built; only the fallback was timed")


if __name__ == "__main__":
    main()
