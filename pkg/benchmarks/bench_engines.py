#!/usr/bin/env python3
"""Benchmark the compiled ensemble kernel against the pure-numpy engine.

Runs the dense online loop on workloads shaped like the shipped
experiments and prints a timing table plus the agreement error.

    python3 benchmarks/bench_engines.py [--repeats 5]
"""

import argparse
import time

import numpy as np

from metalms._kernels import available_engines, get_engine


def workload(T, n_models, dim, seed=0):
    rng = np.random.default_rng(seed)
    phi = rng.uniform(-1.0, 1.0, size=(T, dim))
    y = rng.normal(size=T)
    beta0 = rng.normal(scale=0.3, size=(n_models, dim))
    w0 = np.full(n_models, 1.0 / n_models)
    m0 = float(np.linalg.norm(phi[0]))
    d = 10.0 * dim / 0.25
    return dict(phi=phi, y=y, d=d, gamma=0.5, lam=1e-3, ball_radius=5.0,
                w0=w0, beta0=beta0, m0=m0)


def run(engine, args, repeats):
    eng = get_engine(engine)
    best = float("inf")
    out = None
    for _ in range(repeats):
        t0 = time.perf_counter()
        out = eng.run_dense(args["phi"], args["y"], args["d"], args["gamma"],
                            args["lam"], args["ball_radius"], args["w0"],
                            args["beta0"], args["m0"])
        best = min(best, time.perf_counter() - t0)
    return best, out


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeats", type=int, default=5)
    opts = ap.parse_args()

    cases = [
        ("benchmark-size (T=5000, N2=500, m=2)", workload(5000, 500, 2)),
        ("long-horizon (T=20000, N2=8, m=2)", workload(20000, 8, 2)),
        ("small-ensemble (T=500, N2=8, m=3)", workload(500, 8, 3)),
    ]
    engines = available_engines()
    print(f"engines available: {', '.join(engines)}")
    header = f"{'case':40s}" + "".join(f"{e:>12s}" for e in engines)
    if len(engines) == 2:
        header += f"{'speedup':>10s}{'max |diff|':>12s}"
    print(header)
    for name, args in cases:
        times = {}
        outs = {}
        for engine in engines:
            times[engine], outs[engine] = run(engine, args, opts.repeats)
        row = f"{name:40s}" + "".join(f"{times[e] * 1e3:10.1f}ms" for e in engines)
        if len(engines) == 2:
            diff = float(np.max(np.abs(outs["python"]["y_pred"]
                                       - outs["cython"]["y_pred"])))
            row += f"{times['python'] / times['cython']:9.1f}x{diff:12.2e}"
        print(row)


if __name__ == "__main__":
    main()
