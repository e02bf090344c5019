#!/usr/bin/env python3
"""Benchmark the numba-jitted residual kernels against the numpy fallback.

Both backends always exist in setnewton._kernels; the package picks one at
import time via the SETNEWTON_NUMBA env var. This script times them side by
side on the shipped problems, for full and set-restricted evaluation, and
reports the speedup. Run:

    python benchmarks/bench_kernels.py [--repeats 2000]
"""

import argparse
import time

import numpy as np

from setnewton import Demo2DPoisson, SpikeBvp1D, build_from_flags
from setnewton import _kernels


def best_of(fn, repeats, trials=5):
    best = float("inf")
    for _ in range(trials):
        t0 = time.perf_counter()
        for _ in range(repeats):
            fn()
        best = min(best, (time.perf_counter() - t0) / repeats)
    return best


def bench_spike(n, frac, repeats, rng):
    p = SpikeBvp1D(n)
    u = 1000.0 * rng.standard_normal(n)
    flags = rng.random(n) < frac
    flags[n // 2] = True
    s = build_from_flags(flags, p.grid)
    out_full = np.empty(n)
    out_red = np.empty(s.size)

    rows = []
    np_full = best_of(
        lambda: _kernels.spike_full_numpy(u, p.inv_h2, p.coef, p.src, out_full), repeats
    )
    np_red = best_of(
        lambda: _kernels.spike_reduced_numpy(u, s.members, p.inv_h2, p.coef, p.src, out_red),
        repeats,
    )
    rows.append((f"spike1d n={n} full", np_full, None))
    rows.append((f"spike1d n={n} reduced |S|={s.size}", np_red, None))
    if _kernels.spike_full_numba is not None:
        nb_full = best_of(
            lambda: _kernels.spike_full_numba(u, p.inv_h2, p.coef, p.src, out_full), repeats
        )
        nb_red = best_of(
            lambda: _kernels.spike_reduced_numba(
                u, s.members, p.inv_h2, p.coef, p.src, out_red
            ),
            repeats,
        )
        rows[0] = (rows[0][0], np_full, nb_full)
        rows[1] = (rows[1][0], np_red, nb_red)
    return rows


def bench_demo2d(n, frac, repeats, rng):
    p = Demo2DPoisson(n, n)
    m = n * n
    u = rng.standard_normal(m)
    flags = rng.random(m) < frac
    flags[m // 2] = True
    s = build_from_flags(flags, p.grid)
    out_full = np.empty(m)
    out_red = np.empty(s.size)

    rows = []
    np_full = best_of(
        lambda: _kernels.demo2d_full_numpy(u, n, n, p.inv_hx2, p.inv_hy2, p.src, out_full),
        repeats,
    )
    np_red = best_of(
        lambda: _kernels.demo2d_reduced_numpy(
            u, s.members, n, n, p.inv_hx2, p.inv_hy2, p.src, out_red
        ),
        repeats,
    )
    rows.append((f"demo2d {n}x{n} full", np_full, None))
    rows.append((f"demo2d {n}x{n} reduced |S|={s.size}", np_red, None))
    if _kernels.demo2d_full_numba is not None:
        nb_full = best_of(
            lambda: _kernels.demo2d_full_numba(
                u, n, n, p.inv_hx2, p.inv_hy2, p.src, out_full
            ),
            repeats,
        )
        nb_red = best_of(
            lambda: _kernels.demo2d_reduced_numba(
                u, s.row_j, s.row_ptr, s.row_i, n, n, p.inv_hx2, p.inv_hy2, p.src, out_red
            ),
            repeats,
        )
        rows[0] = (rows[0][0], np_full, nb_full)
        rows[1] = (rows[1][0], np_red, nb_red)
    return rows


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--repeats", type=int, default=2000)
    args = parser.parse_args()

    rng = np.random.default_rng(0)
    if _kernels.spike_full_numba is not None:
        _kernels.warmup()
        print("numba kernels compiled; solver default backend:",
              "numba" if _kernels.NUMBA_ENABLED else "numpy (SETNEWTON_NUMBA=0)")
    else:
        print("numba not importable; timing the numpy path only")

    rows = []
    for n in (1000, 100_000):
        rows += bench_spike(n, frac=0.05, repeats=args.repeats, rng=rng)
    for n in (32, 128):
        rows += bench_demo2d(n, frac=0.05, repeats=args.repeats, rng=rng)

    width = max(len(r[0]) for r in rows)
    print(f"\n{'kernel':<{width}}  {'numpy':>10}  {'numba':>10}  {'speedup':>7}")
    for name, t_np, t_nb in rows:
        if t_nb is None:
            print(f"{name:<{width}}  {t_np * 1e6:>8.2f}us  {'-':>10}  {'-':>7}")
        else:
            print(
                f"{name:<{width}}  {t_np * 1e6:>8.2f}us  {t_nb * 1e6:>8.2f}us"
                f"  {t_np / t_nb:>6.1f}x"
            )


if __name__ == "__main__":
    main()
