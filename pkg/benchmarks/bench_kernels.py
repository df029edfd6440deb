"""Timing comparison of the compiled kernels against the numpy reference.

Run from the repository root:

    python3 benchmarks/bench_kernels.py [--repeats 5] [--scale 1.0]

Prints per-kernel wall times for both backends plus the speedup factor.
The compiled extension wins clearly on the scatter (the numpy version pays
fancy-indexing overhead per call) and modestly on the KDE; batched logistic
GD is BLAS-bound either way, so the two backends run at par there and the
extension mainly removes the numpy dispatch overhead at tiny sizes.
"""

import argparse
import statistics
import sys
import time

import numpy as np

from fdl._kernels import pyref

try:
    from fdl._kernels import _fast
except ImportError:
    _fast = None


def best_of(fn, repeats):
    times = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times), statistics.median(times)


def scatter_args(scale):
    from fdl.spectral import conjugate_map

    shape = (32, 32)
    rev = conjugate_map(shape)
    idx = np.arange(rev.size)
    self_idx = np.flatnonzero(rev == idx)
    pair_a = np.flatnonzero(idx < rev)
    pair_b = rev[pair_a]
    n = max(1, int(2000 * scale))
    rng = np.random.default_rng(0)
    pair_vals = rng.standard_normal((n, pair_a.size)) + 1j * rng.standard_normal(
        (n, pair_a.size)
    )
    self_vals = rng.standard_normal((n, self_idx.size))
    return pair_vals, self_vals, pair_a, pair_b, self_idx, rev.size


def kde_args(scale):
    rng = np.random.default_rng(1)
    samples = rng.standard_normal(max(100, int(6000 * scale)))
    grid = np.linspace(-4.0, 4.0, 1025)
    return samples, grid, 0.25


def logistic_args(scale):
    rng = np.random.default_rng(2)
    n = max(10, int(40 * scale))
    x = rng.standard_normal((n, 2))
    labels = (rng.random((max(1, int(200 * scale)), n)) < 0.5).astype(np.float64)
    return x, labels, 500, 0.1, 1e-4


CASES = [
    ("hermitian_scatter", scatter_args),
    ("kde_gauss", kde_args),
    ("logistic_gd_batch", logistic_args),
]


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeats", type=int, default=5, help="timing repeats (best kept)")
    ap.add_argument("--scale", type=float, default=1.0, help="problem size multiplier")
    args = ap.parse_args(argv)

    if _fast is None:
        print("compiled extension not available; timing the reference only", file=sys.stderr)

    header = f"{'kernel':<20} {'python (ms)':>12} {'compiled (ms)':>14} {'speedup':>9}"
    print(header)
    print("-" * len(header))
    for name, build in CASES:
        call_args = build(args.scale)
        ref_fn = getattr(pyref, name)
        ref_best, _ = best_of(lambda: ref_fn(*call_args), args.repeats)
        if _fast is None:
            print(f"{name:<20} {ref_best * 1e3:>12.3f} {'-':>14} {'-':>9}")
            continue
        fast_fn = getattr(_fast, name)
        fast_best, _ = best_of(lambda: fast_fn(*call_args), args.repeats)
        ratio = ref_best / fast_best if fast_best > 0 else float("inf")
        print(
            f"{name:<20} {ref_best * 1e3:>12.3f} {fast_best * 1e3:>14.3f} {ratio:>8.2f}x"
        )
    return 0


if __name__ == "__main__":
    sys.exit(main())
