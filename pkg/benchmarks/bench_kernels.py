#!/usr/bin/env python3
"""Time the numba and numpy kernel backends on representative inputs.

    python benchmarks/bench_kernels.py [--repeat 50]

Prints median wall time per call and the speedup, and checks that both
backends return the same numbers before timing anything.
"""

import argparse
import time

import numpy as np

from onebitcs import _kernels
from onebitcs.numerics import gauss_hermite_rule, legendre_rule


def median_time(fn, repeat):
    fn()  # warm-up (triggers jit compilation / cache load)
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return float(np.median(times))


def cases():
    gl_x, gl_w = legendre_rule(101)
    gh = gauss_hermite_rule(101)
    fixed = (0.1, 0.2, 0.25, np.array([0.4]), np.array([1.0]), gl_x, gl_w, 10.0)
    gauss = (0.1, 0.2, 0.25, 0.5 * gh.nodes, gh.weights, gl_x, gl_w, 10.0)
    z = np.random.default_rng(0).normal(size=768)
    trace = (z, 0.5, 0.8, 0.8, 0.01, 0.0, 0.0)
    return [
        ("measurement_sums, fixed threshold", "measurement_sums", fixed),
        ("measurement_sums, gaussian thresholds (101 nodes)", "measurement_sums", gauss),
        ("adaptive_trace, M=768", "adaptive_trace", trace),
    ]


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=50)
    args = parser.parse_args()
    backends = _kernels.backends()
    if "numba" not in backends:
        raise SystemExit("numba is not importable; nothing to compare")
    print(f"{'kernel':52s} {'numpy':>11s} {'numba':>11s} {'speedup':>8s}")
    for label, name, inputs in cases():
        ref = getattr(backends["numpy"], name)(*inputs)
        got = getattr(backends["numba"], name)(*inputs)
        for a, b in zip(ref, got):
            np.testing.assert_allclose(np.asarray(b, float), np.asarray(a, float), rtol=1e-12, atol=1e-15)
        t_np = median_time(lambda: getattr(backends["numpy"], name)(*inputs), args.repeat)
        t_nb = median_time(lambda: getattr(backends["numba"], name)(*inputs), args.repeat)
        print(f"{label:52s} {t_np * 1e6:9.1f}us {t_nb * 1e6:9.1f}us {t_np / t_nb:7.1f}x")


if __name__ == "__main__":
    main()
