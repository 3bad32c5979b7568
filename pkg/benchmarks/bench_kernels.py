#!/usr/bin/env python3
"""Compiled vs NumPy propagation kernels on identical workloads.

The backend is chosen at import, so each side runs in its own
subprocess (CHAOSBOUND_PURE_PYTHON=1 forces the fallback).  Besides
wall times, the parent checks that both backends produce the same
physics.  Each backend is bitwise deterministic run-to-run; across
backends the summation order differs at the last bit, and a chaotic
flow amplifies that exponentially, so cross-backend agreement is
checked on short horizons with tight tolerances rather than by hash.

Usage: python3 benchmarks/bench_kernels.py [--repeat N]
"""

import argparse
import json
import os
import subprocess
import sys
import time


def run_workloads(repeat):
    import numpy as np

    from chaosbound import backend_name
    from chaosbound.classical import classical_thermal_otoc, \
        poincare_section
    from chaosbound.potential import DoubleWell2D
    from chaosbound.ring_polymer import rpmd_otoc

    pot = DoubleWell2D()
    tc = pot.params.t_crossover
    out = {"backend": backend_name(), "cases": {}}

    def case(name, fn, rtol):
        best, payload = None, None
        for _ in range(repeat):
            t0 = time.perf_counter()
            payload = fn()
            dt = time.perf_counter() - t0
            best = dt if best is None else min(best, dt)
        out["cases"][name] = {"seconds": best, "rtol": rtol,
                              "values": np.asarray(payload).tolist()}

    def classical():
        s = classical_thermal_otoc(pot, 3.0 * tc, n_traj=256, t_max=4.0,
                                   seed=11, workers=1)
        return s.values

    def rpmd():
        s = rpmd_otoc(pot, 0.95 * tc, n_traj=48, t_max=2.0, n_beads=16,
                      seed=11, workers=1)
        return s.values

    def section():
        ps = poincare_section(pot, pot.params.barrier_height, n_traj=12,
                              t_max=80.0, seed=11, workers=1)
        # only early crossings: later ones scramble under any last-bit
        # difference (Lyapunov amplification), which is chaos, not a bug
        first = []
        for tid in range(12):
            rows = ps.points[ps.points[:, 0] == tid]
            if rows.shape[0]:
                first.append(rows[0, 1:4])
        return first

    case("classical OTOC  256 traj x 2000 steps", classical, 1e-9)
    case("RPMD OTOC       48 traj x 16 beads x 1000 steps", rpmd, 1e-9)
    case("Poincare        12 traj x 40000 steps (first crossings)",
         section, 1e-6)
    return out


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=3,
                    help="timing repeats per case (best is kept)")
    ap.add_argument("--child", action="store_true", help=argparse.SUPPRESS)
    args = ap.parse_args()

    if args.child:
        json.dump(run_workloads(args.repeat), sys.stdout)
        return 0

    import numpy as np

    here = os.path.abspath(__file__)
    results = {}
    for label, env_val in (("compiled", None), ("numpy", "1")):
        env = dict(os.environ)
        env.pop("CHAOSBOUND_PURE_PYTHON", None)
        if env_val:
            env["CHAOSBOUND_PURE_PYTHON"] = env_val
        proc = subprocess.run(
            [sys.executable, here, "--child", "--repeat",
             str(args.repeat)],
            env=env, capture_output=True, text=True)
        if proc.returncode != 0:
            print(proc.stderr, file=sys.stderr)
            return proc.returncode
        results[label] = json.loads(proc.stdout)

    if results["compiled"]["backend"] != "compiled":
        print("note: compiled extension unavailable; "
              "both columns ran the numpy backend\n")

    width = max(len(k) for k in results["numpy"]["cases"])
    print(f"{'case':<{width}}  {'compiled':>10}  {'numpy':>10}  "
          f"{'speedup':>8}  agree")
    ok = True
    for name, nc in results["numpy"]["cases"].items():
        cc = results["compiled"]["cases"][name]
        a = np.asarray(cc["values"])
        b = np.asarray(nc["values"])
        same = a.shape == b.shape and np.allclose(a, b, rtol=nc["rtol"],
                                                  atol=1e-12)
        ok &= same
        ratio = nc["seconds"] / cc["seconds"]
        print(f"{name:<{width}}  {cc['seconds']:>9.3f}s  "
              f"{nc['seconds']:>9.3f}s  {ratio:>7.1f}x  "
              f"{'yes' if same else 'NO'}")
    if not ok:
        print("\nbackends disagree beyond tolerance", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
