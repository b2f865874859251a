"""Benchmark the compiled importance-sampling kernel against the numpy fallback.

Run:  python benchmarks/bench_backends.py [--pairs 5000] [--repeat 30]
"""

import argparse
import time

import numpy as np

from matshrink import ProblemDims, RngState, embed_spectrum
from matshrink._backend import HAVE_COMPILED, get_backend

CASES = [
    ("flat", 0, 0.0, 0.0),
    ("matrix-t (det, p=3)", 1, 0.5, 1.0),
    ("stein-frobenius", 2, 13.0, 0.0),
    ("columnwise", 3, 1.0, 0.5),
]


def bench(kernel, X, Z, family, a, b, repeat):
    kernel(X, Z, family, a, b)  # warm up
    t0 = time.perf_counter()
    for _ in range(repeat):
        kernel(X, Z, family, a, b)
    return (time.perf_counter() - t0) / repeat


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--pairs", type=int, default=5000)
    parser.add_argument("--repeat", type=int, default=30)
    parser.add_argument("--n", type=int, default=5)
    parser.add_argument("--p", type=int, default=3)
    args = parser.parse_args()

    gen = RngState(0).generator()
    sigma = [10.0] + [0.0] * (args.p - 1)
    X = embed_spectrum(ProblemDims(args.n, args.p), sigma)
    Z = gen.standard_normal((args.pairs, args.n, args.p))

    backends = ["python"] + (["compiled"] if HAVE_COMPILED else [])
    print(f"is_posterior_mean, {args.pairs} antithetic pairs, n={args.n}, p={args.p}")
    for name, family, a, b in CASES:
        times = {}
        for backend in backends:
            kernel = get_backend(backend).is_posterior_mean
            times[backend] = bench(kernel, X, Z, family, a, b, args.repeat)
        line = f"  {name:24s}"
        for backend in backends:
            line += f" {backend}: {times[backend] * 1e3:8.2f} ms"
        if len(times) == 2:
            line += f"   speedup: {times['python'] / times['compiled']:.1f}x"
        print(line)
    if not HAVE_COMPILED:
        print("note: compiled backend unavailable; showing python fallback only")
    else:
        m1, e1 = get_backend("python").is_posterior_mean(X, Z, 1, 0.5, 1.0)
        m2, e2 = get_backend("compiled").is_posterior_mean(X, Z, 1, 0.5, 1.0)
        print(f"backend agreement: max |diff| = {np.abs(m1 - m2).max():.2e}, "
              f"|ess diff| = {abs(e1 - e2):.2e}")


if __name__ == "__main__":
    main()
