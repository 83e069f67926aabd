#!/usr/bin/env python3
"""Benchmark the numba kernels against the pure-numpy fallback.

Times the four hot kernels on workloads shaped like a real lens run
(tridiagonal propagation over a 10-sigma window at N = 1e4) and checks the
two implementations agree numerically.

Usage:
    python benchmarks/bench_kernels.py [--dim 2001] [--iters 30]

Selecting the backend for a whole run instead happens via the environment:
    FOCKLENS_NUMBA=0 python ...   # pure numpy
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from focklens.kernels import IMPLEMENTATIONS


def make_workload(dim: int, seed: int = 0):
    rng = np.random.default_rng(seed)
    diag = (rng.normal(size=dim) + 0j).astype(np.complex128)
    hop = rng.normal(size=dim - 1) + 1j * rng.normal(size=dim - 1)
    lo = hop
    up = np.conj(hop)
    psi = rng.normal(size=dim) + 1j * rng.normal(size=dim)
    psi /= np.linalg.norm(psi)
    coeffs = (rng.normal(size=300) * np.exp(-np.arange(300) / 60.0)
              ).astype(np.complex128)
    return diag, lo, up, psi, coeffs


def bench(fn, args, iters):
    fn(*args)  # warm-up (JIT compile for the numba path)
    t0 = time.perf_counter()
    for _ in range(iters):
        out = fn(*args)
    return (time.perf_counter() - t0) / iters, out


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--dim", type=int, default=2001,
                    help="state vector length (default: 10-sigma window at N=1e4)")
    ap.add_argument("--iters", type=int, default=30)
    args = ap.parse_args()

    diag, lo, up, psi, coeffs = make_workload(args.dim)
    scaled = (diag / 400.0, lo / 400.0, up / 400.0)
    cases = {
        "tridiag_matvec": (diag, lo, up, psi),
        "cheb_apply": (*scaled, psi, coeffs),
        "taylor_apply": (-1j * diag, -1j * lo, -1j * up, psi, 0.5, 8, 64),
        "phase_apply": (psi, 9000.0, 2.45e-3, 10000.0, 0.0),
    }

    backends = list(IMPLEMENTATIONS)
    print(f"dim={args.dim} iters={args.iters} backends={backends}")
    print(f"{'kernel':<16s}" + "".join(f"{b:>14s}" for b in backends)
          + f"{'speedup':>10s}{'max|diff|':>12s}")
    for name, case in cases.items():
        times = {}
        outs = {}
        for backend in backends:
            dt, out = bench(IMPLEMENTATIONS[backend][name], case, args.iters)
            times[backend] = dt
            outs[backend] = out[0] if isinstance(out, tuple) else out
        diff = 0.0
        if len(backends) == 2:
            a, b = (outs[x] for x in backends)
            diff = float(np.max(np.abs(a - b)))
        speed = times["numpy"] / times[backends[-1]]
        print(f"{name:<16s}"
              + "".join(f"{times[b] * 1e6:>12.1f}us" for b in backends)
              + f"{speed:>9.2f}x{diff:>12.2e}")


if __name__ == "__main__":
    main()
