"""Compare the compiled and pure-Python kernels.

    python benchmarks/bench_kernels.py [--repeat N]

Times the batched Sturm root counter (quartic and quintic families) and the
batched Householder Pfaffian (12x12 class-D Majorana forms), checks that the
two backends agree exactly on counts and to 1e-12 (relative to the batch maximum) on Pfaffians, and prints a
table of per-call times and speedups.
"""
import argparse
import time

import numpy as np

from weyl_atlas import _pykernels
from weyl_atlas import canonical as cn
from weyl_atlas import classd

try:
    from weyl_atlas import _ckernels
except ImportError:  # extension not built
    _ckernels = None


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--n", type=int, default=20000, help="batch size for root counting")
    args = ap.parse_args()
    rng = np.random.default_rng(0)

    cases = []
    for cls in (cn.Swallowtail(), cn.Butterfly()):
        C = np.ascontiguousarray(cn.coefficients(cls, rng.uniform(-2, 2, (args.n, cls.m))))
        cases.append((f"sturm count, {cls.kind} x{args.n}",
                      lambda C=C: (C, cn.DEFAULT_TOL), "count_real_roots_batch"))
    ang = rng.uniform(-np.pi, np.pi, (4000, 3))
    A = np.ascontiguousarray(classd.majorana_batch(6, ang))
    cases.append(("pfaffian 12x12 x4000", lambda: (A,), "pfaffian_batch"))

    print(f"{'kernel':34s} {'python [s]':>11s} {'cython [s]':>11s} {'speedup':>8s}")
    for label, make_args, name in cases:
        a = make_args()
        tp, outp = best_of(lambda: getattr(_pykernels, name)(*a), args.repeat)
        if _ckernels is None:
            print(f"{label:34s} {tp:11.4f} {'n/a':>11s} {'n/a':>8s}")
            continue
        tc, outc = best_of(lambda: getattr(_ckernels, name)(*a), args.repeat)
        if name == "pfaffian_batch":
            # relative to the batch scale: individual Pfaffians pass through zero
            assert np.max(np.abs(outp - outc)) <= 1e-12 * np.max(np.abs(outp)), "backends disagree"
        else:
            assert np.array_equal(outp, outc), "backends disagree"
        print(f"{label:34s} {tp:11.4f} {tc:11.4f} {tp / tc:7.1f}x")


if __name__ == "__main__":
    main()
