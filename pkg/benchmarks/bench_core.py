"""Benchmark the compiled ratio-loss kernel against the NumPy fallback.

Times ``ratio_terms`` (value + gradient w.r.t. the exponent matrix) on
type-4 affinities of growing batch size, for both the plain-ratio and the
log-ratio transform.

Usage: python benchmarks/bench_core.py [--repeats N]
"""

import argparse
import time

import numpy as np

from gclkit import _core_py
from gclkit.affinity import type4_affinity

try:
    from gclkit import _core
except ImportError:
    _core = None


def make_case(n, rng):
    a = type4_affinity(n).a
    e = rng.normal(size=(2 * n, 2 * n))
    e = 0.5 * (e + e.T)
    active = (a > 0).any(axis=1).astype(np.uint8)
    return e, a, active


def time_impl(impl, case, log_transform, repeats):
    e, a, active = case
    inv_norm = 1.0 / active.sum()
    args = (e, a, active, 1e-12, log_transform, inv_norm)
    impl.ratio_terms(*args)  # warm up
    t0 = time.perf_counter()
    for _ in range(repeats):
        impl.ratio_terms(*args)
    return (time.perf_counter() - t0) / repeats


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--repeats", type=int, default=200)
    args = parser.parse_args()

    rng = np.random.default_rng(0)
    sizes = (8, 16, 32, 64, 128, 256)

    if _core is None:
        print("compiled backend not available; showing NumPy fallback only")
    header = f"{'entries':>8} {'transform':>10} {'numpy':>12} {'cython':>12} {'speedup':>8}"
    print(header)
    print("-" * len(header))
    for n in sizes:
        case = make_case(n, rng)
        for log_transform in (False, True):
            t_py = time_impl(_core_py, case, log_transform, args.repeats)
            label = "log-ratio" if log_transform else "ratio"
            if _core is None:
                print(f"{2 * n:>8} {label:>10} {t_py * 1e6:>10.1f}us {'-':>12} {'-':>8}")
                continue
            t_cy = time_impl(_core, case, log_transform, args.repeats)
            print(f"{2 * n:>8} {label:>10} {t_py * 1e6:>10.1f}us "
                  f"{t_cy * 1e6:>10.1f}us {t_py / t_cy:>7.2f}x")

        # sanity: both implementations agree on this case
        if _core is not None:
            e, a, active = case
            got = _core.ratio_terms(e, a, active, 1e-12, False, 1.0 / active.sum())
            want = _core_py.ratio_terms(e, a, active, 1e-12, False, 1.0 / active.sum())
            assert abs(got[0] - want[0]) < 1e-12
            assert np.allclose(got[2], want[2], atol=1e-13)


if __name__ == "__main__":
    main()
