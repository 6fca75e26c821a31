"""Time the compiled and pure-Python coordinate-descent kernels on the same
problems and check that they agree.

    python benchmarks/bench_kernels.py [--repeat 3] [--sizes 800x9,2000x41,5000x101]
"""
import argparse
import time

import numpy as np

from siabf import _kernels


def problem(n, p, seed=0):
    """Fourier dictionary on a uniform grid plus a sparse target, like a real fit."""
    rng = np.random.default_rng(seed)
    t = np.arange(n) * 0.01
    periods = rng.uniform(0.05, n * 0.01, (p - 1) // 2)
    cols = [f(2 * np.pi * t / T) for T in periods for f in (np.sin, np.cos)] + [np.ones(n)]
    X = np.column_stack(cols)[:, :p]
    xi = np.where(rng.random(p) < 0.2, rng.standard_normal(p), 0.0)
    return X, X @ xi + 0.1 * rng.standard_normal(n)


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
    ap.add_argument("--sizes", default="800x9,2000x41,5000x101")
    ap.add_argument("--lam", type=float, default=5e-4)
    ap.add_argument("--max-iter", type=int, default=2000)
    args = ap.parse_args()

    backends = ["python"] + (["cython"] if _kernels._cd_compiled is not None else [])
    if len(backends) == 1:
        print("compiled kernel not built; timing the Python fallback only")
    print(f"{'n x p':>12}  {'sweeps':>7}  " + "  ".join(f"{b + ' [s]':>12}" for b in backends) + "  speedup  max|dxi|")
    for size in args.sizes.split(","):
        n, p = (int(v) for v in size.split("x"))
        X, y = problem(n, p)
        res = {}
        for b in backends:
            def run():
                xi = np.zeros(p)
                sweeps, _, _ = _kernels.coordinate_descent(X, y, args.lam, xi, args.max_iter, 1e-8, backend=b)
                return xi, sweeps
            res[b] = best_of(run, args.repeat)
        sweeps = res["python"][1][1]
        line = f"{size:>12}  {sweeps:>7}  " + "  ".join(f"{res[b][0]:>12.4f}" for b in backends)
        if "cython" in res:
            diff = np.max(np.abs(res["python"][1][0] - res["cython"][1][0]))
            line += f"  {res['python'][0] / res['cython'][0]:>6.1f}x  {diff:.1e}"
        print(line)


if __name__ == "__main__":
    main()
