"""Compare the numba and numpy kernel paths.

Both paths are called directly, so one process times both regardless of
RYDSWITCH_DISABLE_NUMBA. Each kernel is checked for identical output before
it is timed; the first numba call (compilation) is excluded.

    python benchmarks/bench_kernels.py [--cycles 200000] [--repeat 3]
"""
from __future__ import annotations

import argparse
import sys
import time

import numpy as np

from rydswitch import kernels
from rydswitch.montecarlo import Scenario, _kernel_inputs
from rydswitch.propagation import default_nmax


def best_of(fn, repeat):
    best = np.inf
    out = None
    for _ in range(repeat):
        t = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t)
    return best, out


def cases(n):
    key = kernels.stream_key(2014)
    fp, ip, gcdf, tcdf, ncdf = _kernel_inputs(Scenario())
    yield ("cycles", n,
           lambda: kernels.cycles_numpy(0, n, key, fp, ip, gcdf, tcdf, ncdf),
           lambda: kernels.cycles_numba(0, n, key, fp, ip, gcdf, tcdf, ncdf))

    mu0, nmax = 1.7, default_nmax(1.7)
    yield ("bin_trials", n,
           lambda: kernels.bin_trials_numpy(0, n, mu0, 10.0, 1.2, 1.0, key, nmax),
           lambda: kernels.bin_trials_numba(0, n, mu0, 10.0, 1.2, 1.0, key, nmax))

    ns = np.arange(n, dtype=np.int64) % 6
    base = np.arange(n, dtype=np.uint64) * np.uint64(8) + np.uint64(1)
    yield ("transit", n,
           lambda: kernels.transit_numpy(ns, 3.2, 0.9, 1.0, key, base),
           lambda: kernels.transit_numba(ns, 3.2, 0.9, 1.0, key, base))

    rng = np.random.default_rng(7)
    nc = max(n // 10, 1000)
    c0 = np.repeat(np.arange(nc), rng.poisson(1.0, nc)).astype(np.int64)
    t0 = rng.uniform(0, 20.0, c0.size)
    counts1 = rng.poisson(1.0, nc)
    ptr1 = np.concatenate([[0], np.cumsum(counts1)]).astype(np.int64)
    t1 = rng.uniform(0, 20.0, ptr1[-1])
    yield ("pair_histogram", t0.size,
           lambda: kernels.pair_histogram_numpy(t0, c0, t1, ptr1, 1, nc, -2.05, 0.1, 41),
           lambda: kernels._pair_histogram_s(t0, c0, t1, ptr1, 1, nc, -2.05, 0.1, 41))


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--cycles", type=int, default=200_000)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)
    if not kernels.HAVE_NUMBA:
        print("numba is not installed; nothing to compare", file=sys.stderr)
        return 1
    print(f"{'kernel':<16}{'size':>10}{'numpy [s]':>12}{'numba [s]':>12}{'speedup':>10}  identical")
    ok = True
    for name, size, f_np, f_nb in cases(args.cycles):
        f_nb()  # compile
        t_np, r_np = best_of(f_np, args.repeat)
        t_nb, r_nb = best_of(f_nb, args.repeat)
        same = np.array_equal(r_np, r_nb)
        ok &= same
        print(f"{name:<16}{size:>10}{t_np:>12.4f}{t_nb:>12.4f}{t_np / t_nb:>10.1f}  {same}")
    return 0 if ok else 1


if __name__ == "__main__":
    sys.exit(main())
