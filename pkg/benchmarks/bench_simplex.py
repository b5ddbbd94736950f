"""Compare the compiled simplex kernel against the NumPy fallback.

    python benchmarks/bench_simplex.py [--repeat 3]

Workloads: the demo peak OPF, one demo week (168 hourly OPFs) and a batch
of random 40-bus grids. Reports best-of-N wall time per backend.
"""
import argparse
import sys
import time
from pathlib import Path

import numpy as np

from hybridgrid import data_path
from hybridgrid.dcopf import OpfProblem, build_lp, profile_factors
from hybridgrid.grid_model import load_case, load_profiles
from hybridgrid.lp import available_backends, solve_lp
from hybridgrid.preprocess import preprocess

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "tests"))
from fuzz import random_grid  # noqa: E402


def workloads():
    base = preprocess(load_case(data_path("demo_case30.json")))
    profiles = load_profiles(data_path("demo_profiles.json"))
    peak = [build_lp(OpfProblem(base))[0]]
    week = []
    for h in range(1176, 1176 + 168):
        scale, avail = profile_factors(base, profiles, h)
        week.append(build_lp(OpfProblem(base, scale, avail))[0])
    rng = np.random.default_rng(7)
    grids = [build_lp(OpfProblem(random_grid(rng, 40, 30, rating_range=(30.0, 400.0))))[0] for _ in range(20)]
    return {"demo peak": peak, "demo week (168 h)": week, "20 random 40-bus grids": grids}


def best_of(lps, backend, repeat):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        for lp in lps:
            solve_lp(lp, backend=backend)
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    backends = available_backends()
    print(f"backends: {', '.join(backends)}")
    if "cython" not in backends:
        print("compiled kernel not built; only the fallback is timed")
    for name, lps in workloads().items():
        objs = {b: [solve_lp(lp, backend=b).objective for lp in lps] for b in backends}
        if len(backends) > 1:
            assert np.allclose(objs["cython"], objs["python"], rtol=1e-9), name
        times = {b: best_of(lps, b, args.repeat) for b in backends}
        line = f"{name:26s}" + "".join(f"  {b} {t * 1e3:9.1f} ms" for b, t in times.items())
        if len(times) > 1:
            line += f"  speedup {times['python'] / times['cython']:.1f}x"
        print(line)


if __name__ == "__main__":
    main()
