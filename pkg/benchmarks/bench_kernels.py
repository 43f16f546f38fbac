#!/usr/bin/env python3
"""Benchmark: compiled Cython kernels vs the pure-Python fallback.

The four kernels dominate every expensive code path (cut-set enumeration,
rescaled word sums, interval-measure recursion, gap enumeration); this
script times both backends on representative workloads and prints a table.

    python benchmarks/bench_kernels.py [--quick]
"""

import argparse
import math
import time

import numpy as np

from mftube._kernels import _pykernels

try:
    from mftube._kernels import _ckernels
except ImportError:
    _ckernels = None

from mftube.ifs import cantor_system, system_from_dict

CM = cantor_system()
HT = system_from_dict({
    "dimension": 1,
    "maps": [{"ratio": 0.5, "translation": [0.0]},
             {"ratio": 1 / 3, "translation": [2 / 3]}],
    "probabilities": [0.5, 0.5],
})


def workloads(quick: bool):
    deep = 10 if quick else 14
    n_meas = 2000 if quick else 20000
    rng = np.random.default_rng(0)
    xs = rng.uniform(-0.1, 1.1, size=n_meas)
    rho, shift = CM.signed_params_1d
    lo, hi = CM.hull_1d
    yield ("cut_set CM r=2*3^-%d (%d words)" % (deep, 2 ** deep),
           lambda impl: impl.cut_set_arrays(
               np.ascontiguousarray(CM.ratios),
               np.ascontiguousarray(CM.probs),
               2 * 3.0 ** -deep, 1e-12, 2 ** 24))
    yield ("cut_set (1/2,1/3) r=1e-%d" % (4 if quick else 5),
           lambda impl: impl.cut_set_arrays(
               np.ascontiguousarray(HT.ratios),
               np.ascontiguousarray(HT.probs),
               10.0 ** -(4 if quick else 5), 1e-12, 2 ** 24))
    yield ("rescaled_b CM r=2*3^-%d" % deep,
           lambda impl: impl.rescaled_b_sum(
               np.ascontiguousarray(CM.ratios),
               np.ascontiguousarray(CM.probs ** 2.0),
               1.0 - 2.0, 2 * 3.0 ** -deep, 1e-12, 2 ** 24))
    yield ("measure_interval x%d depth 40" % n_meas,
           lambda impl: impl.measure_interval_batch(
               np.ascontiguousarray(rho), np.ascontiguousarray(shift),
               np.ascontiguousarray(CM.probs), lo, hi,
               np.ascontiguousarray(xs - 0.01),
               np.ascontiguousarray(xs + 0.01), 40))
    yield ("gap_excess CM r=3^-%d" % deep,
           lambda impl: impl.gap_excess(
               np.ascontiguousarray([1 / 3]),
               np.ascontiguousarray(CM.ratios), 3.0 ** -deep, 2 ** 24))


def time_call(fn, min_repeat=3):
    best = math.inf
    for _ in range(min_repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--quick", action="store_true",
                        help="smaller workloads")
    args = parser.parse_args()

    if _ckernels is None:
        print("compiled kernels unavailable; timing pure backend only")
    width = 44
    print(f"{'workload':<{width}} {'pure (s)':>10} {'compiled (s)':>13} "
          f"{'speedup':>9}")
    print("-" * (width + 35))
    for name, call in workloads(args.quick):
        t_pure = time_call(lambda: call(_pykernels))
        if _ckernels is not None:
            t_comp = time_call(lambda: call(_ckernels))
            print(f"{name:<{width}} {t_pure:>10.4f} {t_comp:>13.5f} "
                  f"{t_pure / t_comp:>8.1f}x")
        else:
            print(f"{name:<{width}} {t_pure:>10.4f} {'-':>13} {'-':>9}")


if __name__ == "__main__":
    main()
