"""Benchmark the numba and numpy backends of the hot kernel sums.

Times one efficient-score evaluation (smoothers + hazard gradient at every
event) for a few sample sizes and checks both backends agree.

    python3 benchmarks/bench_backends.py [--sizes 100 200 500] [--repeat 20]
"""

import argparse
import time

import numpy as np

from censdr import use_backend
from censdr.score import efficient_score
from censdr.simgen import gen_study, study_spec
from censdr.smoothers import IndexParam
from censdr.solver import start_bandwidths
from censdr.survdata import standardize


def timeit(fn, repeat, warmup=2):
    for _ in range(warmup):
        fn()
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best * 1e3


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", type=int, nargs="+", default=[100, 200, 500])
    ap.add_argument("--study", default="s5")
    ap.add_argument("--repeat", type=int, default=10)
    args = ap.parse_args()

    print(f"{'n':>6} {'numba ms':>10} {'numpy ms':>10} {'speedup':>8} {'max |diff|':>11}")
    for n in args.sizes:
        data, truth = gen_study(study_spec(args.study, n, 0.4, 1), 0)
        work, st = standardize(data)
        beta = IndexParam.from_beta(truth * st.scales[:, None], normalize=True)
        bw = start_bandwidths(work, beta)
        out = {}
        times = {}
        for name in ("numba", "numpy"):
            with use_backend(name):
                out[name] = efficient_score(work, beta, bw, warn=False).g
                times[name] = timeit(lambda: efficient_score(work, beta, bw, warn=False), args.repeat)
        diff = float(np.max(np.abs(out["numba"] - out["numpy"])))
        print(f"{n:>6} {times['numba']:>10.2f} {times['numpy']:>10.2f} "
              f"{times['numpy'] / times['numba']:>8.1f} {diff:>11.2e}")


if __name__ == "__main__":
    main()
