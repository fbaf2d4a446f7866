"""Time the neighborhood-count kernels: numba vs numpy, KD-tree vs brute force.

    python3 benchmarks/bench_kernels.py --n 4000 --d 3 --k 32

Every configuration is warmed up once (so JIT compilation is excluded), then
timed ``--repeats`` times; the best time is reported. Outputs of all
configurations are compared and any disagreement is flagged, since the
backends are meant to agree bit for bit.
"""
import argparse
import time

import numpy as np

from classifiability import _accel
from classifiability.core import ClassTable, validate_dataset
from classifiability.neighbors import build_index, threshold_from_fraction


def best_time(fn, repeats):
    fn()
    times = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def bench(dataset, metric, k, theta, repeats):
    rows = []
    outputs = {}
    for use_numba in (True, False):
        if use_numba and not _accel.HAVE_NUMBA:
            continue
        _accel.use_numba(use_numba)
        for brute in (False, True):
            index = build_index(dataset, metric, brute_force=brute)
            if not brute and index.backend == "brute":
                continue  # no tree for this metric
            backend = "numba" if use_numba else "numpy"
            for task, fn in (("knn", lambda: index.knn_counts(k)),
                             ("radius", lambda: index.radius_counts(theta))):
                seconds = best_time(fn, repeats)
                outputs.setdefault(task, []).append(fn())
                rows.append((metric, task, backend, index.backend, seconds))
    _accel.use_numba(True)
    agree = all(all(np.array_equal(o, outs[0]) for o in outs) for outs in outputs.values())
    return rows, agree


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--n", type=int, default=4000)
    p.add_argument("--d", type=int, default=3)
    p.add_argument("--k", type=int, default=32)
    p.add_argument("--classes", type=int, default=3)
    p.add_argument("--metrics", default="l2,l1,canberra")
    p.add_argument("--repeats", type=int, default=3)
    p.add_argument("--seed", type=int, default=0)
    args = p.parse_args()

    rng = np.random.default_rng(args.seed)
    X = rng.normal(size=(args.n, args.d))
    y = rng.integers(0, args.classes, args.n)
    y[:args.classes] = np.arange(args.classes)
    dataset = validate_dataset(X, y, ClassTable.numbered(args.classes))

    print(f"n={args.n} d={args.d} k={args.k} threads={_accel.get_threads()} "
          f"numba={'yes' if _accel.HAVE_NUMBA else 'no'}")
    print(f"{'metric':<10}{'task':<8}{'kernel':<8}{'search':<8}{'seconds':>10}{'vs numpy brute':>16}")
    for metric in args.metrics.split(","):
        theta = threshold_from_fraction(dataset, 0.02, metric)
        rows, agree = bench(dataset, metric, args.k, theta, args.repeats)
        baseline = {task: s for m, task, b, s_, s in rows if b == "numpy" and s_ == "brute"}
        for m, task, backend, search, seconds in rows:
            speedup = baseline[task] / seconds if seconds > 0 else float("inf")
            print(f"{m:<10}{task:<8}{backend:<8}{search:<8}{seconds:>10.4f}{speedup:>15.1f}x")
        if not agree:
            print(f"{metric}: WARNING outputs differ between backends")


if __name__ == "__main__":
    main()
