"""Time the numba and numpy paths of the hot kernels side by side.

    python3 benchmarks/bench_kernels.py [--repeat 5] [--m 300]

Each row reports the best wall time per path (after one warm-up call that
also triggers JIT compilation) and the largest absolute difference between
the two results.
"""
import argparse
import time

import numpy as np

from ratecode import _kernels, datagen, segmentation


def best_time(fn, repeat):
    fn()
    times = []
    for _ in range(repeat):
        start = time.perf_counter()
        fn()
        times.append(time.perf_counter() - start)
    return min(times)


def cases(m):
    W, _ = datagen.sample_mixture(datagen.three_component(seed=0), m)
    n = W.shape[0]
    rng = np.random.default_rng(0)
    counts = rng.integers(1, 20, m).astype(np.float64)
    means = np.ascontiguousarray(W.T)
    scatters = np.stack([np.outer(v, v) for v in rng.standard_normal((m, n))])
    ia, ib = np.triu_indices(m, 1)
    eps2 = 0.05**2
    table = segmentation._subset_table(W[:, :10], 0.5)
    A = rng.standard_normal((2, 2 * m))

    yield "merged_lengths", lambda nb: _kernels.merged_lengths(counts, means, scatters, ia, ib, eps2, use_numba=nb)
    yield "rgs_search m=10", lambda nb: _kernels.rgs_search(table, 10, use_numba=nb)[1]
    yield "rbf_gram", lambda nb: _kernels.rbf_gram(A, A, 0.5, use_numba=nb)
    yield "segment_greedy", lambda nb: segmentation.segment_greedy(W, 0.05, use_numba=nb).total_length


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=5)
    parser.add_argument("--m", type=int, default=300, help="sample count for the fixtures")
    args = parser.parse_args(argv)
    if not _kernels.HAVE_NUMBA:
        raise SystemExit("numba is not importable; nothing to compare")
    print(f"{'kernel':<18}{'numba [s]':>12}{'numpy [s]':>12}{'speedup':>10}{'max |diff|':>14}")
    for name, fn in cases(args.m):
        t_nb = best_time(lambda: fn(True), args.repeat)
        t_np = best_time(lambda: fn(False), args.repeat)
        diff = float(np.max(np.abs(np.asarray(fn(True)) - np.asarray(fn(False)))))
        print(f"{name:<18}{t_nb:>12.4f}{t_np:>12.4f}{t_np / t_nb:>10.2f}{diff:>14.3e}")


if __name__ == "__main__":
    main()
