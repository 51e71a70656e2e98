"""Self-contained verification suites behind ``sivor verify``.

Each suite draws random cases, compares the implementation against an
independent oracle and returns a ``SuiteResult``.  ``level`` picks the
case counts: "sampled" runs in seconds, "full" matches the acceptance
counts and can take much longer.  ``fault`` injects a known defect so the
harness itself can be checked: "skip-perturbation" builds the dummy frame
without its general-position push.
"""
from __future__ import annotations

import random
import time
import traceback
from dataclasses import dataclass, field
from fractions import Fraction

from .errors import UnknownSuite
from .gauge import dummy_frame, named_gauge
from .locate import UniformLocator
from .mixture import preset_mixtures, sample_instance
from .nettree import (build_net_tree, compress_to_subset, mark_and_prune, partition_clusters,
                      verify_net_tree)
from .operator import certify_entropy, run, step1_locate, step5_vornn
from .trainer import train
from .voronoi import (brute_force_voronoi, build_voronoi, combinatorial_equal, delete_site,
                      diagram_of, merge_local, split_labeled, triangulate_cells)
from .wspd import check_wspd, knn_graph, knn_oracle, nn_graph_checks, wspd_build

GAUGES = ("square", "triangle", "pentagon")
FAULTS = ("skip-perturbation",)


@dataclass
class SuiteResult:
    name: str
    level: str
    cases: int = 0
    failures: list = field(default_factory=list)
    seconds: float = 0.0

    @property
    def passed(self):
        return not self.failures

    def to_json(self):
        return {"suite": self.name, "level": self.level, "cases": self.cases,
                "failures": len(self.failures), "first_failures": self.failures[:5],
                "seconds": round(self.seconds, 3), "passed": self.passed}


def _count(level, sampled, full):
    return full if level == "full" else sampled


def _frame(g, fault):
    return dummy_frame(g, perturb=fault != "skip-perturbation")


def _points(rng, n, spread=1.0):
    return [(rng.uniform(-spread, spread), rng.uniform(-spread, spread)) for _ in range(n)]


def _guard(res, tag, fn, *args):
    """Run one case; any exception counts as a failure of that case."""
    res.cases += 1
    try:
        ok = fn(*args)
    except Exception as exc:  # a crash is a failed case, not a crashed suite
        res.failures.append(f"{tag}: {type(exc).__name__}: {exc}")
        return False
    if not ok:
        res.failures.append(tag)
    return ok


# ---------------------------------------------------------------------------
# geometry: the clearance envelope and the seed-vertex rule on random diagrams
# ---------------------------------------------------------------------------

def _q_boundary(g, per_edge=3):
    """Exact points spread over the boundary of Q."""
    qs = g._exact_Q
    out = []
    for i, a in enumerate(qs):
        b = qs[(i + 1) % len(qs)]
        for j in range(per_edge + 1):
            t = Fraction(j, per_edge + 1)
            out.append((a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])))
    return out


def envelope_holds(d, w1, w2, t, boundary):
    """Exact check that the clearance at x = w1 + t (w2 - w1) lies in those of w1 and w2."""
    g = d.gauge
    x1, y1, l1 = d.exact(w1)
    x2, y2, l2 = d.exact(w2)
    x, y = x1 + t * (x2 - x1), y1 + t * (y2 - y1)
    lam = min(g.xcore.gval(x - Fraction(p[0]), y - Fraction(p[1])) for p in d.points.values())
    for zx, zy in boundary:
        px, py = x - lam * zx, y - lam * zy
        if g.xcore.gval(x1 - px, y1 - py) > l1 and g.xcore.gval(x2 - px, y2 - py) > l2:
            return False
    return True


def seed_rule_holds(d, tri, q):
    """A point that conflicts with anything conflicts with a corner of its triangle."""
    _, u, v = d.triangles[tri]
    if not any(d.conflicts(k, q) for k in d.verts):
        return True
    return d.conflicts(u, q) or d.conflicts(v, q)


def suite_geometry(level, rng, fault=None):
    res = SuiteResult("geometry", level)
    cases = _count(level, 300, 10_000)
    per_diagram = 50
    for gi in range(max(1, cases // per_diagram)):
        g = named_gauge(GAUGES[gi % len(GAUGES)])
        fr = _frame(g, fault)
        n = rng.randint(3, 40)
        try:
            d = triangulate_cells(build_voronoi(g, _points(rng, n), fr, random.Random(gi)))
        except Exception as exc:
            res.cases += 1
            res.failures.append(f"build {g.k}-gon n={n}: {type(exc).__name__}: {exc}")
            continue
        boundary = _q_boundary(g)
        edges = [(a, b) for a in d.verts for b in d.vertex_neighbors(a)
                 if a < b and d.verts[a].lam is not None and d.verts[b].lam is not None]
        for j in range(per_diagram):
            w1, w2 = edges[rng.randrange(len(edges))]
            t = Fraction(rng.randint(0, 1000), 1000)
            _guard(res, f"envelope {w1} {w2} t={t}", envelope_holds, d, w1, w2, t, boundary)
        loc = UniformLocator(d)
        for j in range(per_diagram):
            q = (rng.uniform(-1, 1), rng.uniform(-1, 1))
            tri, _ = loc.locate(q)
            _guard(res, f"seed rule {q}", seed_rule_holds, d, tri, q)
    return res


# ---------------------------------------------------------------------------
# voronoi: construction, deletion, merge, split and VorNN against brute force
# ---------------------------------------------------------------------------

def _voronoi_case(g, fr, rng, trial):
    n = rng.randint(1, 30)
    pts = _points(rng, n)
    d = build_voronoi(g, pts, fr, random.Random(trial))
    if not combinatorial_equal(d, brute_force_voronoi(g, pts, fr)):
        return False
    D = len(fr.dummies)
    lab = rng.choice(d.real_sites())
    rest = {s: p for s, p in d.points.items() if s != lab and s >= D}
    if not combinatorial_equal(delete_site(d, lab), brute_force_voronoi(g, rest, fr, labels=True)):
        return False
    labs = d.real_sites()
    rng.shuffle(labs)
    k = rng.randint(0, len(labs))
    R, I = labs[:k], labs[k:]
    dR = diagram_of(g, fr, {s: d.points[s] for s in R})
    ci = {s: [key for key in dR.verts if dR.conflicts(key, d.points[s])] for s in I}
    if not combinatorial_equal(merge_local(dR, ci, {s: d.points[s] for s in I}), d):
        return False
    dI, dR2 = split_labeled(d, {s: "I" if s in I else "R" for s in labs}, random.Random(trial))
    return (combinatorial_equal(dI, diagram_of(g, fr, {s: d.points[s] for s in I}))
            and combinatorial_equal(dR2, dR))


def _vornn_case(g, fr, rng, trial):
    n = rng.randint(2, 128)
    D = len(fr.dummies)
    pts = {D + i: p for i, p in enumerate(_points(rng, n))}
    t = build_net_tree(g, pts, 11)
    T = compress_to_subset(t, partition_clusters(t, 4), set(pts))
    got = step5_vornn(g, fr, pts, T, random.Random(trial))
    return combinatorial_equal(got, diagram_of(g, fr, pts))


def suite_voronoi(level, rng, fault=None):
    res = SuiteResult("voronoi", level)
    for trial in range(_count(level, 12, 300)):
        g = named_gauge(GAUGES[trial % len(GAUGES)])
        fr = _frame(g, fault)
        _guard(res, f"{g.k}-gon diagram ops trial {trial}", _voronoi_case, g, fr, rng, trial)
        _guard(res, f"{g.k}-gon vornn trial {trial}", _vornn_case, g, fr, rng, trial)
    return res


# ---------------------------------------------------------------------------
# net-tree, WSPD and kNN
# ---------------------------------------------------------------------------

def _tree_points(rng, n, clustered):
    if clustered:
        return {i: (rng.gauss(0, 0.01) + rng.choice([-0.5, 0.5]), rng.gauss(0, 0.01))
                for i in range(n)}
    return {i + 7: (rng.uniform(-1, 1), rng.uniform(-1, 1)) for i in range(n)}


def _nettree_case(g, rng, trial, max_n):
    n = rng.choice([1, 2, 3, 10, 100, max_n])
    pts = _tree_points(rng, n, trial % 3 == 0)
    t = build_net_tree(g, pts, 11)
    if verify_net_tree(t, g) is not None:
        return False
    cl = partition_clusters(t, rng.choice([1, 2, 3, 4, 8]))
    labs = list(pts)
    R = set(rng.sample(labs, rng.randint(1, n))) | {t.rep[c.root] for c in cl}
    a = compress_to_subset(t, cl, R)
    if a != mark_and_prune(t, R):
        return False
    R2 = set(rng.sample(sorted(R), rng.randint(1, len(R))))
    return mark_and_prune(a, R2) == mark_and_prune(t, R2)


def suite_nettree(level, rng, fault=None):
    res = SuiteResult("nettree", level)
    for trial in range(_count(level, 12, 200)):
        g = named_gauge(GAUGES[trial % len(GAUGES)])
        _guard(res, f"{g.k}-gon tree trial {trial}", _nettree_case, g, rng, trial,
               _count(level, 128, 512))
    return res


def _wspd_case(g, rng, n):
    pts = {i: p for i, p in enumerate(_points(rng, n))}
    t = build_net_tree(g, pts, 11)
    tx = compress_to_subset(t, partition_clusters(t, 3), set(pts))
    return all(not check_wspd(tx, wspd_build(tx, c, g), c, g) for c in (1, 4))


def suite_wspd(level, rng, fault=None):
    res = SuiteResult("wspd", level)
    for trial in range(_count(level, 6, 40)):
        g = named_gauge(GAUGES[trial % len(GAUGES)])
        n = rng.choice([2, 3, 10, 64, _count(level, 96, 256)])
        _guard(res, f"{g.k}-gon wspd n={n}", _wspd_case, g, rng, n)
    return res


def _knn_case(g, fr, rng, n):
    D = len(fr.dummies)
    pts = {D + i: p for i, p in enumerate(_points(rng, n))}
    t = build_net_tree(g, pts, 11)
    tx = compress_to_subset(t, partition_clusters(t, 3), set(pts))
    for k in (1, 2, 3):
        if k < n and knn_graph(tx, k, g) != knn_oracle(g, pts, k):
            return False
    d = diagram_of(g, fr, pts)
    return not nn_graph_checks(knn_graph(tx, 1, g), d)["non_adjacent"]


def suite_knn(level, rng, fault=None):
    res = SuiteResult("knn", level)
    for trial in range(_count(level, 6, 40)):
        g = named_gauge(GAUGES[trial % len(GAUGES)])
        n = rng.choice([2, 3, 10, 64, _count(level, 96, 256)])
        _guard(res, f"{g.k}-gon knn n={n}", _knn_case, g, _frame(g, fault), rng, n)
    return res


# ---------------------------------------------------------------------------
# the trained pipeline and the certifier
# ---------------------------------------------------------------------------

def _model(gname, preset, n, m, seed, fault):
    g = named_gauge(gname)
    mx = preset_mixtures(preset, n, m, seed=seed)
    return mx, train(mx, n, m, 0.5, g, frame=_frame(g, fault), seed=seed,
                     allow_large_m=m * m > n)


def suite_pipeline(level, rng, fault=None):
    res = SuiteResult("pipeline", level)
    if level == "full":
        configs = [(gn, n, m) for gn in GAUGES for n in (8, 16, 32, 64) for m in (1, 2, 4)]
        per = 500
    else:
        configs = [("square", 16, 2), ("triangle", 16, 1), ("pentagon", 32, 4)]
        per = 4
    presets = ("low_entropy", "clustered", "adversarial_uniform")
    for ci, (gn, n, m) in enumerate(configs):
        try:
            mx, model = _model(gn, presets[ci % 3], n, m, ci, fault)
        except Exception as exc:
            res.cases += 1
            res.failures.append(f"train {gn} n={n} m={m}: {type(exc).__name__}: {exc}")
            continue
        for j in range(per):
            I = sample_instance(mx, rng)

            def case():
                dI, _ = run(model, I, random.Random(j))
                return combinatorial_equal(dI, brute_force_voronoi(model.gauge, I, model.frame))
            _guard(res, f"{gn} n={n} m={m} instance {j}", case)
    return res


def suite_certifier(level, rng, fault=None):
    res = SuiteResult("certifier", level)
    per = _count(level, 3, 20)
    for ci, (gn, preset) in enumerate([("square", "low_entropy"), ("triangle", "clustered"),
                                       ("pentagon", "adversarial_uniform")]):
        n, m = _count(level, 16, 64), 2
        try:
            mx, model = _model(gn, preset, n, m, ci, fault)
        except Exception as exc:
            res.cases += 1
            res.failures.append(f"train {gn} {preset}: {type(exc).__name__}: {exc}")
            continue
        for j in range(per):
            I = sample_instance(mx, rng)

            def case():
                rep = certify_entropy(model, I)
                tris, _ = step1_locate(model, I)
                return rep.tris == tris and not rep.vi2_failures and not rep.claim_failures
            _guard(res, f"{gn} {preset} instance {j}", case)
    return res


SUITES = {
    "geometry": suite_geometry,
    "voronoi": suite_voronoi,
    "nettree": suite_nettree,
    "wspd": suite_wspd,
    "knn": suite_knn,
    "pipeline": suite_pipeline,
    "certifier": suite_certifier,
}


def run_suite(name, level="sampled", seed=0, fault=None) -> SuiteResult:
    if name not in SUITES:
        raise UnknownSuite(f"unknown suite {name!r}; choose from {', '.join(SUITES)}")
    if level not in ("off", "sampled", "full"):
        raise ValueError(f"unknown verify level {level!r}")
    if fault is not None and fault not in FAULTS:
        raise ValueError(f"unknown fault {fault!r}; choose from {', '.join(FAULTS)}")
    if level == "off":
        return SuiteResult(name, level)
    t0 = time.perf_counter()
    try:
        res = SUITES[name](level, random.Random(seed), fault)
    except Exception:
        res = SuiteResult(name, level, 1, [traceback.format_exc(limit=3)])
    res.seconds = time.perf_counter() - t0
    return res


__all__ = ["SUITES", "FAULTS", "SuiteResult", "run_suite", "envelope_holds", "seed_rule_holds"]
