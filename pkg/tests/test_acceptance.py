"""Acceptance criteria C1 to C8.

Each criterion prints one PASS/FAIL line, which the terminal summary repeats.
Run the file directly to print the lines without pytest:

    python tests/test_acceptance.py [C3 C5 ...]

C1 stops at its 600 s budget unless SIVOR_ACCEPT_FULL=1 is set, in which case
every instance runs and the elapsed time is still compared with the budget.
"""
from __future__ import annotations

import os
import random
import statistics
import sys
import time
from fractions import Fraction

sys.path.insert(0, os.path.dirname(__file__))

import pytest  # noqa: E402

from conftest import ACCEPTANCE_LINES, random_points  # noqa: E402
from oracles import (Gauge, brute_conflict_set, cross, key_sites, knn_consistent,  # noqa: E402
                     metric_gauge, net_tree_violation, point_in_triangle, pruned_shape,
                     vertex_conflicts, wspd_problems)
from sivor.gauge import dummy_frame, named_gauge  # noqa: E402
from sivor.locate import UniformLocator  # noqa: E402
from sivor.mixture import preset_mixtures, sample_instance  # noqa: E402
from sivor.nettree import build_net_tree, compress_to_subset, mark_and_prune, partition_clusters  # noqa: E402
from sivor.operator import certify_entropy, run, step1_locate, step5_vornn  # noqa: E402
from sivor.trainer import train, z_square_ratio  # noqa: E402
from sivor.voronoi import (brute_force_voronoi, build_voronoi, combinatorial_equal,  # noqa: E402
                           conflict_region, diagram_of, locate_seed, merge_local, place_sites,
                           split_labeled, triangulate_cells, vertex_point)
from sivor.wspd import knn_graph, wspd_build  # noqa: E402

GAUGES = ("square", "triangle", "pentagon")
PRESETS = ("low_entropy", "clustered", "adversarial_uniform")
C1_BUDGET = 600.0


def report(cid, ok, title, detail):
    line = f"{cid} {'PASS' if ok else 'FAIL'}  {title}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return ok


def frames():
    return {name: (named_gauge(name), dummy_frame(named_gauge(name))) for name in GAUGES}


def labelled(fr, pts):
    D = len(fr.dummies)
    return {D + i: p for i, p in enumerate(pts)}


def placed(g, fr, pts):
    """Sites moved off degenerate lines the same way every builder does."""
    return place_sites(g, fr, dict(enumerate(fr.dummies)), labelled(fr, pts))


# -- C1 -------------------------------------------------------------------------

def criterion_1(per=500, budget=C1_BUDGET, full=None):
    """run(model, I) against brute force over the whole configuration grid."""
    full = os.environ.get("SIVOR_ACCEPT_FULL") == "1" if full is None else full
    configs = [(gn, n, m) for gn in GAUGES for n in (8, 16, 32, 64) for m in (1, 2, 4)]
    models = {}
    done = [0] * len(configs)
    bad = []
    start = time.perf_counter()
    stopped = False
    # round robin, so an early stop still covers every configuration
    for j in range(per):
        for ci, (gn, n, m) in enumerate(configs):
            if not full and time.perf_counter() - start > budget:
                stopped = True
                break
            if ci not in models:
                mx = preset_mixtures(PRESETS[ci % 3], n, m, seed=ci)
                model = train(mx, n, m, 0.5, named_gauge(gn), seed=ci, allow_large_m=m * m > n)
                models[ci] = (mx, model, random.Random(1000 + ci))
            mx, model, rng = models[ci]
            I = sample_instance(mx, rng)
            try:
                dI, _ = run(model, I, random.Random(j))
                ok = combinatorial_equal(dI, brute_force_voronoi(model.gauge, I, model.frame))
            except Exception as exc:  # a crash counts as a mismatch
                ok = False
                bad.append(f"{gn} n={n} m={m} #{j}: {type(exc).__name__}")
            else:
                if not ok:
                    bad.append(f"{gn} n={n} m={m} #{j}: differs")
            done[ci] += 1
        if stopped:
            break
    elapsed = time.perf_counter() - start
    total = sum(done)
    want = per * len(configs)
    ok = not bad and total == want and elapsed <= budget
    detail = (f"{total}/{want} instances over {len(configs)} configs in {elapsed:.0f}s "
              f"(budget {budget:.0f}s), {len(bad)} mismatches, per-config min {min(done)}")
    if bad:
        detail += f"; first: {bad[0]}"
    return report("C1", ok, "end-to-end run equals brute force", detail)


# -- C2 -------------------------------------------------------------------------

def _clip_outside(poly, a, b):
    """Closure of the part of a convex CCW polygon strictly right of the line a -> b."""
    out = []
    k = len(poly)
    if all(cross(a, b, p) >= 0 for p in poly):
        return out
    for i in range(k):
        p, q = poly[i], poly[(i + 1) % k]
        sp, sq = cross(a, b, p), cross(a, b, q)
        if sp <= 0:
            out.append(p)
        if (sp < 0 < sq) or (sq < 0 < sp):
            t = sp / (sp - sq)
            out.append((p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1])))
    return out


def clearance_covered(G, d, w1, w2, t):
    """Exact test: the clearance at a point of segment w1 w2 lies in the two end clearances.

    The clearance at x is x - lam Q with lam the gauge distance from the
    nearest site.  The part of it outside the clearance of w1 is a union of
    convex pieces, one per side of that clearance; each piece must sit in
    the clearance of w2, which for convex sets means its corners do.
    """
    sites = [(Fraction(p[0]), Fraction(p[1])) for p in d.points.values()]

    def clearance(x):
        lam = min(G.gval(x[0] - s[0], x[1] - s[1]) for s in sites)
        return lam, [(x[0] - lam * vx, x[1] - lam * vy) for vx, vy in G.poly]

    e1 = d.exact(w1)[:2]
    e2 = d.exact(w2)[:2]
    x = (e1[0] + t * (e2[0] - e1[0]), e1[1] + t * (e2[1] - e1[1]))
    _, P = clearance(x)
    _, P1 = clearance(e1)
    lam2, _ = clearance(e2)
    k = len(P1)
    for i in range(k):
        for c in _clip_outside(P, P1[i], P1[(i + 1) % k]):
            if G.gval(e2[0] - c[0], e2[1] - c[1]) > lam2:
                return False
    return True


def criterion_2(cases=10_000, per_diagram=50):
    rng = random.Random(2)
    env_bad, seed_bad, env_n, seed_n = [], [], 0, 0
    fs = frames()
    gi = 0
    while env_n < cases or seed_n < cases:
        gn = GAUGES[gi % 3]
        g, fr = fs[gn]
        G = Gauge(g.vertices_Q)
        pts = random_points(rng, rng.randint(3, 40))
        d = triangulate_cells(build_voronoi(g, pts, fr, random.Random(gi)))
        gi += 1
        edges = [(a, b) for a in d.verts for b in d.vertex_neighbors(a)
                 if a < b and d.verts[a].lam is not None and d.verts[b].lam is not None]
        for _ in range(min(per_diagram, cases - env_n)):
            w1, w2 = edges[rng.randrange(len(edges))]
            t = Fraction(rng.randint(0, 1000), 1000)
            env_n += 1
            if not clearance_covered(G, d, w1, w2, t):
                env_bad.append((gn, w1, w2, t))
        loc = UniformLocator(d, random.Random(gi))
        corners = [(d.points[s], vertex_point(d, u), vertex_point(d, v)) for s, u, v in d.triangles]
        for _ in range(min(per_diagram, cases - seed_n)):
            q = (rng.uniform(-1, 1), rng.uniform(-1, 1))
            t, _ = loc.locate(q)
            seed_n += 1
            _, u, v = d.triangles[t]
            # the located triangle must really hold q, and then the rule must hold
            inside = point_in_triangle(*corners[t], q, slack=1e-9)
            hit = any(vertex_conflicts(G, d, k, q) for k in d.verts)
            if not inside or (hit and not (vertex_conflicts(G, d, u, q) or vertex_conflicts(G, d, v, q))):
                seed_bad.append((gn, q))
    ok = not env_bad and not seed_bad
    detail = (f"envelope {env_n - len(env_bad)}/{env_n}, seed rule {seed_n - len(seed_bad)}/{seed_n} "
              f"over {gi} diagrams")
    return report("C2", ok, "clearance envelope and seed-vertex rule", detail)


# -- C3 -------------------------------------------------------------------------

def _tree_sites(rng, n):
    if rng.random() < 0.5:
        return random_points(rng, n)
    centres = random_points(rng, rng.randint(1, 6), 0.8)
    out = []
    for _ in range(n):
        cx, cy = rng.choice(centres)
        out.append((min(1, max(-1, rng.gauss(cx, 0.05))), min(1, max(-1, rng.gauss(cy, 0.05)))))
    return out


def neighbours(d, s):
    return {t for k in d.cycles[s] for t in key_sites(k) if t != s}


def criterion_3(trees=100, wspd_trees=10, knn_sets=30):
    rng = random.Random(3)
    fs = frames()
    tree_bad, wspd_bad, knn_bad, adj_bad = [], [], [], []
    for i in range(trees):
        g = fs[GAUGES[i % 3]][0]
        n = 512 if i == 0 else rng.randint(2, 512)
        pts = dict(enumerate(_tree_sites(rng, n)))
        v = net_tree_violation(build_net_tree(g, pts, 11), metric_gauge(g.vertices_Q))
        if v is not None:
            tree_bad.append((i, n, v))
    wspd_n = 0
    for i in range(wspd_trees):
        g = fs[GAUGES[i % 3]][0]
        n = 256 if i == 0 else rng.randint(2, 256)
        t = build_net_tree(g, dict(enumerate(_tree_sites(rng, n))), 11)
        for c in (1, 4):
            wspd_n += 1
            if wspd_problems(metric_gauge(g.vertices_Q), t, wspd_build(t, c, g), c):
                wspd_bad.append((i, n, c))
    knn_n = adj_n = 0
    for i in range(knn_sets):
        g, fr = fs[GAUGES[i % 3]]
        pts = labelled(fr, random_points(rng, rng.randint(4, 120)))
        t = build_net_tree(g, pts, 11)
        M = metric_gauge(g.vertices_Q)
        for k in (1, 2, 3):
            knn_n += 1
            if not knn_consistent(M, pts, knn_graph(t, k, g), k):
                knn_bad.append((i, k))
        vor = brute_force_voronoi(g, pts, fr, labels=True)
        for s, (nn,) in knn_graph(t, 1, g).items():
            adj_n += 1
            if nn not in neighbours(vor, s):
                adj_bad.append((i, s, nn))
    ok = not (tree_bad or wspd_bad or knn_bad or adj_bad)
    detail = (f"net-tree {trees - len(tree_bad)}/{trees}, wspd {wspd_n - len(wspd_bad)}/{wspd_n}, "
              f"knn {knn_n - len(knn_bad)}/{knn_n}, 1-NN adjacency {adj_n - len(adj_bad)}/{adj_n}")
    return report("C3", ok, "net-tree, WSPD and kNN", detail)


# -- C4 -------------------------------------------------------------------------

def criterion_4(pairs=200):
    rng = random.Random(4)
    fs = frames()
    iso_bad, idem_bad = [], []
    for i in range(pairs):
        g = fs[GAUGES[i % 3]][0]
        t = build_net_tree(g, dict(enumerate(_tree_sites(rng, rng.randint(2, 160)))), 11)
        cs = partition_clusters(t, rng.randint(1, 9))
        labs = t.labels()
        R = {t.rep[c.root] for c in cs} | set(rng.sample(labs, rng.randint(0, len(labs))))
        ct = compress_to_subset(t, cs, R)
        if (ct.root, ct.shape()) != pruned_shape(t, R) or sorted(ct.labels()) != sorted(R):
            iso_bad.append(i)
        U1 = set(rng.sample(labs, rng.randint(1, len(labs))))
        U2 = set(rng.sample(sorted(U1), rng.randint(1, len(U1))))
        twice = mark_and_prune(mark_and_prune(t, U1), U2)
        if twice != mark_and_prune(t, U2) or (twice.root, twice.shape()) != pruned_shape(t, U2):
            idem_bad.append(i)
    ok = not iso_bad and not idem_bad
    detail = (f"compression {pairs - len(iso_bad)}/{pairs} match the pruned oracle, "
              f"composition {pairs - len(idem_bad)}/{pairs}")
    return report("C4", ok, "compression", detail)


# -- C5 -------------------------------------------------------------------------

def criterion_5(sets=300, max_r=128):
    rng = random.Random(5)
    fs = frames()
    bad = []
    ratios = []
    for i in range(sets):
        g, fr = fs[GAUGES[i % 3]]
        pts = placed(g, fr, random_points(rng, rng.randint(1, max_r)))
        t = build_net_tree(g, pts, 11)
        T = compress_to_subset(t, partition_clusters(t, rng.randint(1, 6)), set(pts))
        st = {}
        got = step5_vornn(g, fr, pts, T, random.Random(i), stats=st)
        if not combinatorial_equal(got, brute_force_voronoi(g, pts, fr, labels=True)):
            bad.append(i)
        ratios.append((len(pts), st["created"] / len(pts)))
    c = max(r for _, r in ratios)
    small = [r for n, r in ratios if 16 <= n <= 48]
    large = [r for n, r in ratios if n >= 96]
    trend = statistics.mean(large) / statistics.mean(small)
    ok = not bad and trend <= 1.5
    detail = (f"{sets - len(bad)}/{sets} equal brute force; created <= {c:.2f}|R| "
              f"(mean {statistics.mean(r for _, r in ratios):.2f}), "
              f"per-site ratio |R|>=96 vs 16..48 = {trend:.2f} (gate 1.5)")
    return report("C5", ok, "VorNN", detail)


# -- C6 -------------------------------------------------------------------------

C6_PRESET, C6_GAUGE = "clustered", "square"


def criterion_6(instances=200, gate=50.0):
    vals = {}
    for n in (64, 128):
        mx = preset_mixtures(C6_PRESET, n, 4, seed=6)
        model = train(mx, n, 4, 0.5, named_gauge(C6_GAUGE), seed=6)
        vals[n] = z_square_ratio(model, mx, instances, random.Random(60 + n))
    growth = vals[128] / vals[64]
    ok = vals[64] <= gate and growth <= 1.5
    detail = (f"{C6_PRESET}/{C6_GAUGE} m=4: n=64 mean {vals[64]:.2f} (gate {gate:g}), "
              f"n=128 mean {vals[128]:.2f}, ratio {growth:.2f} (gate 1.5)")
    return report("C6", ok, "conflict sizes after training", detail)


# -- C7 -------------------------------------------------------------------------

def criterion_7(n=64, m=2, instances=40, cert_instances=20):
    depth, comps, agree, cert_total = {}, {}, 0, 0
    for pi, preset in enumerate(("low_entropy", "adversarial_uniform")):
        mx = preset_mixtures(preset, n, m, seed=7)
        model = train(mx, n, m, 0.5, named_gauge("square"), seed=7)
        rng = random.Random(70 + pi)
        mine, base = [], []
        for _ in range(instances):
            I = sample_instance(mx, rng)
            _, st = step1_locate(model, I)
            mine.extend(st.depths)
            base.extend(model.L_S.locate(p)[1] for p in I)
        depth[preset] = statistics.mean(mine) / statistics.mean(base)
        counts = []
        for _ in range(cert_instances):
            I = sample_instance(mx, rng)
            rep = certify_entropy(model, I)
            cert_total += 1
            agree += rep.tris == step1_locate(model, I)[0]
            counts.append(rep.comparisons)
        comps[preset] = statistics.mean(counts)
    lo, hi = depth["low_entropy"], depth["adversarial_uniform"]
    ok = (lo <= 0.5 and 0.8 <= hi <= 1.5 and agree == cert_total
          and comps["low_entropy"] < comps["adversarial_uniform"])
    detail = (f"depth ratio low_entropy {lo:.2f} (<= 0.5), adversarial_uniform {hi:.2f} (0.8..1.5); "
              f"certifier agrees {agree}/{cert_total}; comparisons "
              f"{comps['low_entropy']:.0f} < {comps['adversarial_uniform']:.0f}")
    return report("C7", ok, "entropy sensitivity", detail)


# -- C8 -------------------------------------------------------------------------

def criterion_8(instances=300):
    rng = random.Random(8)
    fs = frames()
    bad = []
    for i in range(instances):
        g, fr = fs[GAUGES[i % 3]]
        G = Gauge(g.vertices_Q)
        P = placed(g, fr, random_points(rng, rng.randint(2, 60)))
        labs = sorted(P)
        rng.shuffle(labs)
        k = rng.randint(1, len(labs) - 1)
        R = {s: P[s] for s in labs[:k]}
        I = {s: P[s] for s in labs[k:]}
        dR = diagram_of(g, fr, R)
        ci = {s: conflict_region(dR, p, locate_seed(dR, p)) for s, p in I.items()}
        st = {}
        merged = merge_local(dR, ci, I, stats=st)
        oracle_R = triangulate_cells(brute_force_voronoi(g, R, fr, labels=True))
        U = set().union(*(brute_conflict_set(G, oracle_R, p) for p in I.values()))
        fan = {(s, u, v) for s, u, v in oracle_R.triangles if u in U or v in U}
        dI, dR2 = split_labeled(merged, {s: "I" if s in I else "R" for s in P}, random.Random(i))
        checks = {
            "merge": combinatorial_equal(merged, brute_force_voronoi(g, P, fr, labels=True)),
            "split I": combinatorial_equal(dI, brute_force_voronoi(g, I, fr, labels=True)),
            "split R": combinatorial_equal(dR2, oracle_R),
            "U_R": set(st["U_R"]) == U,
            "triangles": set(st["recomputed_triangles"]) == fan,
        }
        failed = [name for name, good in checks.items() if not good]
        if failed:
            bad.append((i, failed))
    ok = not bad
    detail = f"{instances - len(bad)}/{instances} instances"
    if bad:
        detail += f"; first failure #{bad[0][0]}: {', '.join(bad[0][1])}"
    return report("C8", ok, "merge and split", detail + " (merge work = fan triangles at U_R)")


CRITERIA = {f"C{i}": f for i, f in enumerate(
    (criterion_1, criterion_2, criterion_3, criterion_4, criterion_5, criterion_6, criterion_7,
     criterion_8), start=1)}


@pytest.mark.parametrize("cid", sorted(CRITERIA))
def test_acceptance(cid):
    assert CRITERIA[cid]()


if __name__ == "__main__":
    picked = sys.argv[1:] or sorted(CRITERIA)
    results = [CRITERIA[c]() for c in picked]
    sys.exit(0 if all(results) else 1)
