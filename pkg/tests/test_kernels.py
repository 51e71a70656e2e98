import json
import os
import random
import subprocess
import sys

import pytest

from sivor import kernels
from sivor._kernels_py import Degeneracy, GaugeCore as PyCore, Uncertain
from sivor.gauge import named_gauge

compiled = pytest.importorskip("sivor._kernels")


def outcome(fn, *args):
    try:
        return fn(*args)
    except Uncertain:
        return "uncertain"
    except Degeneracy as exc:
        return ("degenerate", exc.reason)


@pytest.mark.parametrize("name", ["square", "triangle", "pentagon"])
def test_compiled_and_pure_agree(name):
    g = named_gauge(name)
    fast = compiled.GaugeCore(g.vertices_Q, g.normals_Q)
    slow = PyCore(g.vertices_Q, g.normals_Q)
    rng = random.Random(len(name))
    for _ in range(3000):
        px, py, qx, qy, cx, cy = (rng.uniform(-1, 1) for _ in range(6))
        assert fast.gval(px, py) == slow.gval(px, py)
        b1 = outcome(fast.bisector, px, py, qx, qy)
        b2 = outcome(slow.bisector, px, py, qx, qy)
        if isinstance(b1, (str, tuple)) or isinstance(b2, (str, tuple)):
            assert b1 == b2
            continue
        assert (b1.points, b1.e_lo, b1.e_hi) == (b2.points, b2.e_lo, b2.e_hi)
        assert outcome(fast.constraint, b1, cx, cy) == outcome(slow.constraint, b2, cx, cy)


def test_side_aligned_pair_is_degenerate_on_both_paths():
    g = named_gauge("square")
    for core in (compiled.GaugeCore(g.vertices_Q, g.normals_Q), PyCore(g.vertices_Q, g.normals_Q)):
        got = outcome(core.bisector, 0.0, 0.0, 0.5, 0.0)
        assert got in ("uncertain", ("degenerate", "parallel"))


def test_pure_switch_selects_the_python_kernels():
    env = dict(os.environ, SIVOR_PURE="1")
    code = "import json, sivor.kernels as k; print(json.dumps(k.COMPILED))"
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True,
                         check=True)
    assert json.loads(out.stdout) is False
    assert kernels.COMPILED is (os.environ.get("SIVOR_PURE", "") not in ("1", "true", "yes"))


def test_pure_path_builds_the_same_diagram():
    code = ("import json, random; from sivor import named_gauge, dummy_frame;"
            "from sivor.voronoi import build_voronoi, canonical_form;"
            "g = named_gauge('pentagon'); r = random.Random(3);"
            "pts = [(r.uniform(-1, 1), r.uniform(-1, 1)) for _ in range(40)];"
            "k, c = canonical_form(build_voronoi(g, pts, dummy_frame(g)));"
            "print(json.dumps(sorted(map(repr, k))))")
    outs = []
    for pure in ("1", "0"):
        env = dict(os.environ, SIVOR_PURE=pure)
        outs.append(subprocess.run([sys.executable, "-c", code], env=env, capture_output=True,
                                   text=True, check=True).stdout)
    assert outs[0] == outs[1]


def test_bench_reports_every_workload():
    from sivor.bench import WORKLOADS, measure
    res = measure("small", repeat=1)
    assert set(res["seconds"]) == set(WORKLOADS)
    assert all(v > 0 for v in res["seconds"].values())
