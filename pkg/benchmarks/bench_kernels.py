"""Compiled vs numpy flow-crossing kernel on the S^3 x S^3 and CP2 workloads.

    python benchmarks/bench_kernels.py [--t-end 100] [--n 200] [--repeat 3]

Prints wall time per backend, the speedup, and checks both backends return
identical crossing counts.
"""
import argparse
import time

import numpy as np

from hopflink import kernels, linking
from hopflink.fields import cp2_lift_field, hopf_pair_field
from hopflink.geometry import CP2
from hopflink.shortpaths import geodesic_system


def workloads():
    ch = linking.s3xs3_chain()
    yield "s3xs3 (1,0)", hopf_pair_field(1.0, 0.0), ch, geodesic_system(ch.manifold)
    K = np.array([[1, 0.3 + 0.2j, 0.1], [0.3 - 0.2j, -0.5, 0.4j], [0.1, -0.4j, 0.2]])
    ch = linking.cp2_strip_chain()
    yield "cp2 strip", cp2_lift_field(1j * K), ch, geodesic_system(CP2())


def best_of(fn, repeat):
    times, out = [], None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.split("\n\n")[0])
    ap.add_argument("--t-end", type=float, default=100.0)
    ap.add_argument("--n", type=int, default=200)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)
    if kernels.BACKEND != "compiled":
        print("compiled extension not built; run `python setup.py build_ext --inplace`")
        return 1
    print(f"{'workload':<14} {'compiled s':>11} {'python s':>10} {'speedup':>8}  agree")
    for name, X, ch, sys_ in workloads():
        run = {b: (lambda b=b: linking.average_lk(X, ch, sys_, args.t_end, args.n, seed=0, backend=b,
                                                  keep_records=True))
               for b in ("compiled", "python")}
        tc, ec = best_of(run["compiled"], args.repeat)
        tp, ep = best_of(run["python"], args.repeat)
        agree = np.array_equal(ec.crossings_flow, ep.crossings_flow)
        print(f"{name:<14} {tc:11.3f} {tp:10.3f} {tp / tc:8.1f}  {agree}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
