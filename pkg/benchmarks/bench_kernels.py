"""Compare the compiled and numpy kernel backends.

    python benchmarks/bench_kernels.py [--repeat 5]
"""

import argparse
import timeit

import numpy as np

from aucmonitor import _pykernels
from aucmonitor.roc_metrics import _resample_counts

try:
    from aucmonitor import _ckernels
except ImportError:
    _ckernels = None


def cases(rng):
    for m, n in [(10, 490), (200, 800), (2_000, 50_000), (50_000, 50_000)]:
        xs = np.sort(rng.normal(1.0, 1.0, m))
        ys = np.sort(rng.normal(0.0, 1.0, n))
        yield f"placement_counts m={m} n={n}", "placement_counts", (xs, ys)
    for m, n, b in [(200, 800, 2000), (20, 380, 2000)]:
        xs = np.sort(rng.normal(1.0, 1.0, m))
        ys = np.sort(rng.normal(0.0, 1.0, n))
        pc = _resample_counts(rng, m, b)
        nc = _resample_counts(rng, n, b)
        yield f"weighted_auc m={m} n={n} B={b}", "weighted_auc", (xs, ys, pc, nc)


def best_time(fn, args, repeat):
    timer = timeit.Timer(lambda: fn(*args))
    loops, _ = timer.autorange()
    return min(timer.repeat(repeat, loops)) / loops


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args()
    rng = np.random.default_rng(0)
    print(f"{'kernel':<42}{'numpy':>12}{'cython':>12}{'speedup':>10}")
    for label, name, inputs in cases(rng):
        t_py = best_time(getattr(_pykernels, name), inputs, args.repeat)
        if _ckernels is None:
            print(f"{label:<42}{t_py * 1e3:>10.3f}ms{'n/a':>12}{'':>10}")
            continue
        t_c = best_time(getattr(_ckernels, name), inputs, args.repeat)
        print(f"{label:<42}{t_py * 1e3:>10.3f}ms{t_c * 1e3:>10.3f}ms{t_py / t_c:>9.1f}x")


if __name__ == "__main__":
    main()
