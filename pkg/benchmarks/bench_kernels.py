"""Compare the numba-compiled kernels with the plain numpy fallback.

Each backend runs in its own interpreter because the choice is made at import
time from ``VECTORQUAD_DISABLE_NUMBA``.

    python benchmarks/bench_kernels.py [--repeat N]
"""
import argparse
import json
import os
import subprocess
import sys

WORKLOAD = r"""
import json, sys, time
import numpy as np
from vectorquad import _jit, kernels
from vectorquad.controller import GainSet
from vectorquad.sim import SimConfig, run_scenario
from vectorquad.so3 import exp_so3
from vectorquad.trajectories import WaterTowerReference
from vectorquad.vehicle import VehicleParams

repeat = int(sys.argv[1])
P = VehicleParams(); G = GainSet.default(P)
rng = np.random.default_rng(0)
W = rng.uniform(-20, 20, (10000, 6))
F, TAU = np.ascontiguousarray(W[:, :3]), np.ascontiguousarray(W[:, 3:])
R0 = exp_so3(np.array([2.0, 1.0, 0.0]))


def alloc_extract():
    for f, tau in zip(F, TAU):
        T = kernels.allocate(f, tau, P.l_x, P.l_y)
        kernels.extract(T, P.c_t)


def recovery():
    kernels.hover_closed_loop(np.zeros(3), np.zeros(3), R0, np.array([0.5, 0.0, 0.0]), np.zeros(3),
                              np.eye(3), G.k_p, G.k_v, G.k_R, G.k_w, P.m, P.J, P.J_inv, P.g_vec,
                              1e-3, 10000, 0.0)


ref = WaterTowerReference()


def scenario():
    run_scenario(SimConfig(duration=5.0), P, G, ref)


out = {"numba": _jit.NUMBA_ENABLED}
for name, fn in (("allocate+extract x10k", alloc_extract), ("attitude recovery 10k steps", recovery),
                 ("water tower 5 s closed loop", scenario)):
    fn()  # warm-up (and JIT compile)
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    out[name] = best
print(json.dumps(out))
"""


def run_backend(disable: bool, repeat: int) -> dict:
    env = dict(os.environ, VECTORQUAD_DISABLE_NUMBA="1" if disable else "0")
    r = subprocess.run([sys.executable, "-c", WORKLOAD, str(repeat)], env=env, check=True,
                       capture_output=True, text=True)
    return json.loads(r.stdout.strip().splitlines()[-1])


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    jit = run_backend(False, args.repeat)
    ref = run_backend(True, args.repeat)
    print(f"{'workload':<30} {'numba (s)':>10} {'numpy (s)':>10} {'speedup':>8}")
    for k in jit:
        if k == "numba":
            continue
        print(f"{k:<30} {jit[k]:10.4f} {ref[k]:10.4f} {ref[k] / jit[k]:7.1f}x")
    if not jit["numba"]:
        print("note: numba is not importable here, both columns use the numpy path")


if __name__ == "__main__":
    main()
