"""Time the compiled kernels against the numpy fallback on the same inputs.

    python3 benchmarks/bench_kernels.py [--repeat N]

Outputs are checked for equality before any timing is reported.
"""

import argparse
import timeit

import numpy as np

from dagsim import kernels
from dagsim._rng import seed_key

CASES = {
    "leaf growth s=64 T=5000": lambda b: kernels.simulate_leaves(seed_key(1), 64, 5000, backend=b),
    "coverage s=16 T=400": lambda b: kernels.simulate_leaves(seed_key(2), 16, 400, 50, True, backend=b),
    "referenced L=128 s=16 x1e4": lambda b: kernels.sample_referenced(seed_key(3), 128, 16, 10_000, backend=b),
    "walk p=0.7 n=1e4 x2e3": lambda b: kernels.walk_exits(seed_key(4), 2_000, 10_000, 0.7, backend=b),
}


def same(a, b):
    if isinstance(a, tuple):
        return all(same(x, y) for x, y in zip(a, b))
    return np.array_equal(a, b)


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--repeat", type=int, default=3)
    args = parser.parse_args()
    backends = ["python"] + (["cython"] if kernels._compiled is not None else [])
    print(f"{'kernel':<30}" + "".join(f"{b:>12}" for b in backends) + ("     speedup" if len(backends) == 2 else ""))
    for name, fn in CASES.items():
        outs = [fn(b) for b in backends]
        if len(outs) == 2 and not same(*outs):
            raise SystemExit(f"{name}: backends disagree")
        times = [min(timeit.repeat(lambda b=b: fn(b), number=1, repeat=args.repeat)) for b in backends]
        row = f"{name:<30}" + "".join(f"{t * 1e3:>10.1f}ms" for t in times)
        if len(times) == 2:
            row += f"{times[0] / times[1]:>11.1f}x"
        print(row)


if __name__ == "__main__":
    main()
