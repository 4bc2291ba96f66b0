"""Timing comparison of the compiled and pure-python kernel backends.

Runs the three hot kernels on representative workloads, checks that the
backends agree (bitwise for the Monte Carlo kernels, 1e-13 for the DP),
and prints a table with the speedup.  Run from the repo root:

    python3 benchmarks/bench_kernels.py [--repeat 3] [--scale 1.0]
"""

from __future__ import annotations

import argparse
import math
import time

import numpy as np

from fluctlab._backend import backends
from fluctlab.chain import region_switched_kernel
from fluctlab.steplaw import law_kernel, ssrw


def _dp_work(scale):
    n = int(20000 * scale)
    law = ssrw()
    kern = law_kernel(law)
    thresholds = np.zeros(n, dtype=np.int64)
    ks = np.arange(1, n + 1, dtype=np.float64)
    caps = 2 + np.ceil(4.0 * np.sqrt(ks * np.log(ks + 2.0))).astype(np.int64)

    def run(mod):
        return mod.dp_killed(1, np.ones(1), kern.offset, kern.probs,
                             thresholds, caps)["survival"]

    return run, "dp_killed    unit walk, n=%d" % n


def _mc_walk_work(scale):
    n = int(2000 * scale)
    trials = int(100000 * scale)
    law = ssrw()
    vals = np.tile(np.asarray(law.values, dtype=np.float64), (n, 1))
    cdf = np.cumsum(law.probs)
    cdf[-1] = 1.0
    cdfs = np.tile(cdf, (n, 1))
    thr = np.zeros(n)

    def run(mod):
        step, endpoint = mod.mc_walk(12345, 1, 0, trials, vals, cdfs, thr, 1.0)
        return np.concatenate([step.astype(np.float64), endpoint])

    return run, "mc_walk      unit walk, n=%d, %d trials" % (n, trials)


def _mc_chain_work(scale):
    n = int(2000 * scale)
    trials = int(50000 * scale)
    vals, cdfs, widths, mode = region_switched_kernel().mc_arrays()

    def run(mod):
        step, endpoint = mod.mc_chain(999, 1, 0, trials, vals, cdfs, widths,
                                      mode, 5.0, n, True)
        return np.concatenate([step.astype(np.float64), endpoint])

    return run, "mc_chain     switched kernel, n=%d, %d trials" % (n, trials)


def _best(fn, mod, repeat):
    best = math.inf
    out = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn(mod)
        best = min(best, time.perf_counter() - t0)
    return best, out


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--scale", type=float, default=1.0,
                    help="shrink or grow every workload")
    args = ap.parse_args()

    mods = backends()
    if "compiled" not in mods:
        print("compiled backend not built; timing python only")
    print(f"backends: {', '.join(sorted(mods))}\n")

    for make in (_dp_work, _mc_walk_work, _mc_chain_work):
        run, label = make(args.scale)
        times = {}
        outs = {}
        for name, mod in mods.items():
            times[name], outs[name] = _best(run, mod, args.repeat)
        line = f"{label:<48}"
        for name in sorted(times):
            line += f"  {name}: {times[name] * 1e3:8.1f} ms"
        if len(times) == 2:
            line += f"  speedup: {times['python'] / times['compiled']:.1f}x"
            gap = float(np.max(np.abs(outs["python"] - outs["compiled"])))
            tol = 1e-13 if label.startswith("dp") else 0.0
            flag = "agree" if gap <= tol else f"DISAGREE ({gap:.2e})"
            line += f"  [{flag}]"
        print(line)


if __name__ == "__main__":
    main()
