"""Compare the compiled and pure-numpy shooting kernels.

    python3 benchmarks/bench_kernels.py [--rays 256] [--levels 48] [--repeat 3]

Prints wall time per fan for each backend and the largest disagreement in
the recorded crossings.
"""
from __future__ import annotations

import argparse
import time

import numpy as np

from warpgeo import _kernels_py
from warpgeo.families import near_extremal_family, round_sphere
from warpgeo.geodesic import ray_fan

try:
    from warpgeo import _kernels as _kernels_c
except ImportError:  # extension not built
    _kernels_c = None


def _time(fn, repeat):
    best = np.inf
    out = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def bench(p, rays, levels, repeat):
    tab = p.geodesic_table
    args = (tab.f, tab.fp, tab.fpp, tab.hs, tab.D, 0.37 * p.D, ray_fan(rays),
            np.linspace(0.05, np.pi, levels), 1.01 * p.D, 1e-7, 0.1)
    rows = []
    t_py, r_py = _time(lambda: _kernels_py.shoot_fan(*args), repeat)
    rows.append(("python", t_py, 0.0))
    if _kernels_c is not None:
        t_c, r_c = _time(lambda: _kernels_c.shoot_fan(*args), repeat)
        # rays grazing a pole (alpha within 0.01 of 0 or pi) are ill-conditioned; compare the rest
        alphas = args[6]
        regular = ((alphas > 0.01) & (alphas < np.pi - 0.01))[:, None]
        ok = np.isfinite(r_py[0]) & np.isfinite(r_c[0]) & regular
        diff = float(np.max(np.abs(r_py[0][ok] - r_c[0][ok]))) if ok.any() else float("nan")
        rows.append(("cython", t_c, diff))
    return rows


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--rays", type=int, default=256)
    ap.add_argument("--levels", type=int, default=48)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)
    if _kernels_c is None:
        print("compiled extension not available; timing the fallback only")
    for label, p in (("round", round_sphere(3)), ("near_extremal k=3", near_extremal_family(3, 3))):
        rows = bench(p, args.rays, args.levels, args.repeat)
        base = rows[0][1]
        print(f"{label}: {args.rays} rays x {args.levels} levels")
        for name, t, diff in rows:
            print(f"  {name:7s} {t * 1e3:9.2f} ms  speedup {base / t:7.1f}x  max |ds| vs python (regular rays) {diff:.2e}")


if __name__ == "__main__":
    main()
