"""Time the compiled and pure-Python kernel backends side by side.

    python3 benchmarks/bench_kernels.py [--repeat 5]

Each case is run with every available backend; the table reports the best
of ``--repeat`` wall-clock timings and the speedup over the Python backend.
"""
import argparse
import timeit

import numpy as np

from sava import kernels


def cases(be, rng):
    small = [rng.uniform(-2, 2, 3) for _ in range(20_000)]
    X = rng.uniform(-2, 2, (2_000, 200))
    xs = rng.normal(0, 1, 200_000)

    def engine_like():
        # many short batches, as the engine feeds them per task per decision time
        la = lb = ma = mb = 0.0
        r = 0
        for v in small:
            la, lb, ma, mb, r = be.absorb_hoeffding(la, lb, ma, mb, r, v, 2.0, 0.05)

    return {
        "absorb_hoeffding 20k x 3": engine_like,
        "absorb_gaussian 200k": lambda: be.absorb_gaussian(0.0, 0.0, 0.0, 0.0, xs, 0.1),
        "hoeffding_batch 2000 x 200": lambda: be.hoeffding_batch(X, 2.0, 0.05),
        "signed_rank_counts n=200": lambda: be.signed_rank_counts(200),
    }


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()

    timings = {}
    for name in kernels.available_backends():
        be = kernels.get_backend(name)
        for case, fn in cases(be, np.random.default_rng(0)).items():
            timings.setdefault(case, {})[name] = min(timeit.repeat(fn, number=1, repeat=args.repeat))

    names = kernels.available_backends()
    print(f"{'case':30s}" + "".join(f"{n:>12s}" for n in names) + f"{'speedup':>10s}")
    for case, row in timings.items():
        line = f"{case:30s}" + "".join(f"{row[n] * 1e3:10.2f}ms" for n in names)
        if "cython" in row:
            line += f"{row['python'] / row['cython']:9.1f}x"
        print(line)


if __name__ == "__main__":
    main()
