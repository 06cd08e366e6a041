"""Time the numba kernels against their numpy twins.

    python benchmarks/bench_backends.py [--n 2000] [--repeats 5]

Prints one line per kernel with the best wall time for each backend and the
speedup. Compilation happens in a warm-up call that is not timed.
"""

import argparse
import time

import numpy as np

from privimmune import (
    MaxDegTask,
    PrivacyBudget,
    SirConfig,
    SpectralWalkTask,
    generate,
    parse_generator,
    privmaxdeg_implicit,
    privminsr_walks,
    simulate_sir,
    spectral_radius,
    use_backend,
)
from privimmune.graph import walk_hitting_utilities


def best_time(fn, repeats):
    fn()
    best = float("inf")
    for _ in range(repeats):
        t = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t)
    return best


def cases(n):
    g = generate(parse_generator(f"chung-lu:n={n},gamma=2.5,dmin=3,dmax={max(n // 20, 4)},seed=1"))
    small = generate(parse_generator(f"chung-lu:n={max(n // 10, 50)},gamma=2.5,dmin=2,dmax=15,seed=1"))
    budget = PrivacyBudget(1.0, 1e-3, 1.0)
    return g, [
        ("spectral_radius", lambda: spectral_radius(g)),
        ("walk_hitting_utilities", lambda: walk_hitting_utilities(g)),
        ("privmaxdeg_implicit", lambda: privmaxdeg_implicit(MaxDegTask(g, 3, budget), np.random.default_rng(0))),
        ("privminsr_walks", lambda: privminsr_walks(SpectralWalkTask(small, budget), np.random.default_rng(0))),
        ("simulate_sir x50", lambda: simulate_sir(g, [], SirConfig(0.2, 20, 50, seed=0))),
    ]


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=2000)
    ap.add_argument("--repeats", type=int, default=5)
    args = ap.parse_args()
    g, todo = cases(args.n)
    print(f"graph: n={g.n} m={g.num_edges}")
    print(f"{'kernel':<24}{'numba ms':>12}{'numpy ms':>12}{'speedup':>10}")
    for name, fn in todo:
        with use_backend("numba"):
            a = best_time(fn, args.repeats)
        with use_backend("numpy"):
            b = best_time(fn, args.repeats)
        print(f"{name:<24}{a * 1e3:>12.2f}{b * 1e3:>12.2f}{b / a:>10.1f}")


if __name__ == "__main__":
    main()
