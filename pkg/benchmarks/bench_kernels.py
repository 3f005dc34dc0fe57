"""Time the compiled kernels against the numpy fallback.

Usage: python benchmarks/bench_kernels.py [--repeat 5] [--csv out.csv]
"""
import argparse
import csv
import sys
import time

import numpy as np

from hofv import kernels
from hofv.fvcore import gauss_weights, mixed_terms
from hofv.fvcore import TrialField
from hofv.meshdual import DofMap, build_lattices, build_uniform_mesh
from hofv.polyquad import gauss_rule

CASES = [(2, 32), (3, 32), (4, 32), (4, 64)]


def best_time(fn, repeat):
    best = np.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def workloads(k, N, rng):
    mesh = build_uniform_mesh(0, 1, 0, 1, N, N)
    lattice, dual = build_lattices(mesh, k)
    rule = gauss_rule(k)
    dof = DofMap.for_lattice(lattice)
    v = TrialField.from_interior(lattice, dof, rng.standard_normal(dof.count))
    ax, ay = gauss_weights(dual)
    r = ax[:, None] * ay[None, :] * mixed_terms(v, dual)[2]
    px, py = rng.uniform(0, 1, 20000), rng.uniform(0, 1, 20000)
    return {
        "assemble_rows": lambda b: b.assemble_rows(mesh.x_breaks, mesh.y_breaks, k, dual.gx, dual.gy,
                                                   rule.nodes, rule.weights),
        "pi_sweep": lambda b: b.pi_sweep(r),
        "eval_points": lambda b: b.eval_points(v.coeffs, mesh.x_breaks, mesh.y_breaks, k, px, py),
    }


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--csv")
    args = ap.parse_args(argv)
    if kernels.compiled_backend is None:
        print("compiled kernels not built; run `python setup.py build_ext --inplace`", file=sys.stderr)
        return 1
    py, cy = kernels.get_backend("python"), kernels.get_backend("cython")
    rng = np.random.default_rng(0)
    rows = []
    print(f"{'kernel':<14}{'k':>3}{'N':>5}{'python [ms]':>14}{'cython [ms]':>14}{'speedup':>10}")
    for k, N in CASES:
        for name, fn in workloads(k, N, rng).items():
            tp = best_time(lambda: fn(py), args.repeat)
            tc = best_time(lambda: fn(cy), args.repeat)
            rows.append({"kernel": name, "k": k, "N": N, "python_ms": 1e3 * tp,
                         "cython_ms": 1e3 * tc, "speedup": tp / tc})
            print(f"{name:<14}{k:>3}{N:>5}{1e3 * tp:>14.3f}{1e3 * tc:>14.3f}{tp / tc:>10.1f}")
    if args.csv:
        with open(args.csv, "w", newline="") as fh:
            w = csv.DictWriter(fh, fieldnames=list(rows[0]))
            w.writeheader()
            w.writerows(rows)
    return 0


if __name__ == "__main__":
    sys.exit(main())
