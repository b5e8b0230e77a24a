"""Time the hot kernels with numba and with the pure-Python fallback.

Each backend runs in its own interpreter because the choice is made at import
time from CAYLEYWALK_NO_NUMBA.

    python benchmarks/bench_kernels.py [--repeat 3] [--scale 1.0]
"""
from __future__ import annotations

import argparse
import json
import os
import subprocess
import sys

WORKER = r"""
import json, sys, time
import numpy as np
from cayleywalk import USING_NUMBA
from cayleywalk.samplers import derive, uniform_on_sphere_batch, uniform_permutation
from cayleywalk.walk import WalkState, draw_transpositions, run
from cayleywalk.geodesic import shadow_geodesic
from cayleywalk.branching import join_weights

repeat, scale = int(sys.argv[1]), float(sys.argv[2])
n = 2000
steps = int(20_000 * scale)
rng = derive(0, 0)
ti, tj = draw_transpositions(n, steps, rng)
tr = run(n, int(800 * scale), derive(0, 1))
count = max(1, int(20 * scale))

def walk():
    WalkState(n).apply(ti, tj)

def shadow():
    shadow_geodesic(tr, derive(0, 2))

def sphere():
    uniform_on_sphere_batch(n, n // 2, count, derive(0, 3))

def join():
    X = uniform_on_sphere_batch(200, 50, 2, derive(0, 4))
    for _ in range(count):
        join_weights(X[0], X[1])

def crp():
    for s in range(count):
        uniform_permutation(n, derive(0, 5, s))

out = {"numba": USING_NUMBA}
for name, fn in [("walk", walk), ("shadow", shadow), ("sphere", sphere), ("join", join), ("crp", crp)]:
    fn()  # warm-up, includes compilation or cache load
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    out[name] = best
print(json.dumps(out))
"""


def measure(no_numba: bool, repeat: int, scale: float) -> dict:
    env = dict(os.environ, CAYLEYWALK_NO_NUMBA="1" if no_numba else "0")
    proc = subprocess.run([sys.executable, "-c", WORKER, str(repeat), str(scale)], env=env,
                          capture_output=True, text=True, check=True)
    return json.loads(proc.stdout)


def main(argv=None) -> None:
    ap = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--scale", type=float, default=1.0, help="workload multiplier")
    args = ap.parse_args(argv)
    fast = measure(False, args.repeat, args.scale)
    slow = measure(True, args.repeat, args.scale)
    if not fast["numba"]:
        print("numba not importable; both columns use the fallback", file=sys.stderr)
    print(f"{'kernel':<8} {'numba [s]':>11} {'python [s]':>11} {'speedup':>9}")
    for key in ("walk", "shadow", "sphere", "join", "crp"):
        print(f"{key:<8} {fast[key]:>11.5f} {slow[key]:>11.5f} {slow[key] / fast[key]:>8.1f}x")


if __name__ == "__main__":
    main()
