"""Timing of the compiled kernels against the pure-Python ones.

The kernel choice is fixed at import, so each side runs in its own
interpreter: ``compare`` starts ``python -m sivor.bench`` twice, once with
SIVOR_PURE=1, and pairs up the timings.
"""
from __future__ import annotations

import json
import os
import random
import subprocess
import sys
import time

WORKLOADS = ("bisector", "constraint", "build_voronoi", "operation")


def _best_of(fn, repeat):
    best = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        dt = time.perf_counter() - t0
        best = dt if best is None else min(best, dt)
    return best


def measure(size="small", repeat=3):
    """Seconds per workload in the current interpreter."""
    from .gauge import dummy_frame, named_gauge
    from .kernels import COMPILED
    from .mixture import preset_mixtures, sample_instance
    from .operator import run
    from .trainer import train
    from .voronoi import build_voronoi

    scale = {"small": 1, "large": 4}[size]
    g = named_gauge("pentagon")
    core = g.core
    rng = random.Random(11)
    pairs = [tuple(rng.uniform(-1, 1) for _ in range(6)) for _ in range(2000 * scale)]
    bis = []
    for px, py, qx, qy, _, _ in pairs:
        try:
            bis.append(core.bisector(px, py, qx, qy))
        except Exception:  # inside the float error band; skipped on both sides
            bis.append(None)

    def do_bisectors():
        for px, py, qx, qy, _, _ in pairs:
            try:
                core.bisector(px, py, qx, qy)
            except Exception:
                pass

    def do_constraints():
        for b, (_, _, _, _, cx, cy) in zip(bis, pairs):
            if b is not None:
                try:
                    core.constraint(b, cx, cy)
                except Exception:
                    pass

    frame = dummy_frame(g)
    sites = [(rng.uniform(-1, 1), rng.uniform(-1, 1)) for _ in range(150 * scale)]

    def do_build():
        build_voronoi(g, sites, frame, random.Random(0))

    n, m = 16 * scale, 2
    mx = preset_mixtures("clustered", n, m, seed=2)
    model = train(mx, n, m, 0.5, g, seed=2)
    insts = [sample_instance(mx, random.Random(100 + j)) for j in range(3)]

    def do_operation():
        for j, inst in enumerate(insts):
            run(model, inst, random.Random(j))

    fns = {"bisector": do_bisectors, "constraint": do_constraints,
           "build_voronoi": do_build, "operation": do_operation}
    return {"compiled": COMPILED,
            "seconds": {w: _best_of(fns[w], repeat) for w in WORKLOADS}}


def _child(pure, size, repeat):
    env = dict(os.environ)
    if pure:
        env["SIVOR_PURE"] = "1"
    else:
        env.pop("SIVOR_PURE", None)
    out = subprocess.run([sys.executable, "-m", "sivor.bench", "--size", size,
                          "--repeat", str(repeat)],
                         env=env, capture_output=True, text=True, check=True)
    return json.loads(out.stdout.strip().splitlines()[-1])


def compare(size="small", repeat=3):
    """Rows of (workload, pure seconds, compiled seconds, speedup)."""
    pure = _child(True, size, repeat)
    fast = _child(False, size, repeat)
    rows = []
    for w in WORKLOADS:
        a, b = pure["seconds"][w], fast["seconds"][w]
        rows.append({"workload": w, "pure_s": a, "compiled_s": b,
                     "speedup": a / b if b > 0 else float("nan"),
                     "compiled_available": fast["compiled"]})
    return rows


def main(argv=None):
    import argparse
    ap = argparse.ArgumentParser(prog="python -m sivor.bench")
    ap.add_argument("--size", choices=("small", "large"), default="small")
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)
    print(json.dumps(measure(args.size, args.repeat)))


if __name__ == "__main__":
    main()
