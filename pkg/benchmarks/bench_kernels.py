"""Head-to-head timing of the compiled matching kernels vs the portable
fallback.  Run from the repo root:

    python3 benchmarks/bench_kernels.py
    python3 benchmarks/bench_kernels.py --clients 10,20,40,80,160 --reps 300
"""

import argparse
import time

import numpy as np

from fedsched._core import kernels_py

try:
    from fedsched._core import _kernels
except ImportError:
    _kernels = None


def time_call(fn, *args, reps):
    fn(*args)  # warm-up
    t0 = time.perf_counter()
    for _ in range(reps):
        fn(*args)
    return (time.perf_counter() - t0) / reps


def bench(num_clients, num_channels, reps, rng):
    weights = rng.uniform(0.0, 1.0, size=(num_clients, num_channels))
    order = np.asarray(rng.permutation(num_clients), dtype=np.int64)
    tie = rng.random((num_clients, num_channels))
    rows = []
    backends = [("python", kernels_py)]
    if _kernels is not None:
        backends.append(("cython", _kernels))
    for label, mod in backends:
        rows.append(
            (
                label,
                time_call(mod.bottleneck_assignment, weights, reps=reps),
                time_call(mod.greedy_assignment, weights, order, tie, reps=reps),
            )
        )
    return rows


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--clients", default="10,20,40,80",
                        help="comma-separated client counts")
    parser.add_argument("--channels", type=int, default=4)
    parser.add_argument("--reps", type=int, default=200)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    if _kernels is None:
        print("compiled kernels unavailable, timing the fallback only")
    rng = np.random.default_rng(args.seed)
    header = f"{'U':>5} {'backend':>8} {'bottleneck':>12} {'greedy':>12}"
    print(header)
    print("-" * len(header))
    for u in [int(v) for v in args.clients.split(",")]:
        results = bench(u, args.channels, args.reps, rng)
        for label, t_bot, t_greedy in results:
            print(f"{u:>5} {label:>8} {t_bot * 1e6:>10.1f}us "
                  f"{t_greedy * 1e6:>10.1f}us")
        if len(results) == 2:
            speedup = results[0][1] / results[1][1]
            print(f"{'':>5} {'':>8} {speedup:>10.1f}x  (bottleneck speedup)")


if __name__ == "__main__":
    main()
