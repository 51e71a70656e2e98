"""Operation phase: diagram of a fresh instance through the trained structures.

``run`` chains the seven steps: locate every input point, collect the
vertices of the trained diagram it conflicts with, compress the net-tree to
the touched sites R, build the diagram of R from nearest-neighbour
sampling, merge the inputs in, and split R back out.
"""
from __future__ import annotations

import random
import time
from collections import defaultdict, deque
from dataclasses import dataclass, field

from .errors import PointOutsideFrame
from .nettree import CompressedTree, compress_to_subset, mark_and_prune
from .trainer import TrainedModel
from .voronoi import (VorDiagram, _new_vertex_keys, _point_index, conflict_region, diagram_of,
                      in_triangle, insert_site, key_sites, locate_seed, make_vertex,
                      LineIndex, merge_local, nudge_site, pair_edge, place_sites, split_labeled,
                      vkey)
from .wspd import knn_graph

LABEL_BASE = 10 ** 9
FINE_NUDGE = 2.0 ** -46


def input_labels(n):
    return [LABEL_BASE + i for i in range(n)]


@dataclass
class OperationStats:
    times: dict = field(default_factory=dict)
    depths: list = field(default_factory=list)
    li_answers: int = 0
    ls_fallbacks: int = 0
    conflict_sizes: list = field(default_factory=list)
    seed_fallbacks: int = 0
    R_size: int = 0
    z_square: int = 0
    tree_size: int = 0
    vornn_depth: int = 0
    vornn_created: int = 0
    vornn_seed_fallbacks: int = 0
    vornn_recreated: int = 0
    merge_triangles: int = 0
    U_R: int = 0
    split_depth: int = 0
    split_fallback: bool = False
    coincident: int = 0

    def to_json(self):
        out = dict(self.__dict__)
        out["mean_depth"] = sum(self.depths) / len(self.depths) if self.depths else 0.0
        out["total_vs"] = sum(self.conflict_sizes)
        return out


@dataclass
class ConflictIndex:
    """Located triangle and conflicting vertices of every input point, both ways."""
    tri: dict
    conf: dict
    Z: dict

    @classmethod
    def from_conflicts(cls, tri, conf):
        Z = defaultdict(list)
        for lab in sorted(conf):
            for k in conf[lab]:
                Z[k].append(lab)
        return cls(dict(tri), {k: frozenset(v) for k, v in conf.items()}, dict(Z))

    def U(self):
        return set(self.Z)

    def consistent(self):
        for lab, keys in self.conf.items():
            for k in keys:
                if lab not in self.Z.get(k, ()):
                    return False
        return all(k in self.conf[lab] for k, labs in self.Z.items() for lab in labs)

    def z_square(self):
        return sum(len(v) ** 2 for v in self.Z.values())


# ---------------------------------------------------------------------------
# steps
# ---------------------------------------------------------------------------

def step1_locate(model: TrainedModel, I, stats: OperationStats = None):
    """Triangle of the trained diagram holding each p_i, asking L_i first."""
    stats = stats if stats is not None else OperationStats()
    if len(I) != model.n:
        raise ValueError(f"instance has {len(I)} points, model expects {model.n}")
    out = []
    for i, p in enumerate(I):
        if not model.frame.contains(p):
            raise PointOutsideFrame(f"input point {i} at {p} lies outside the frame box")
        face, depth = model.L[i].locate(p)
        if face is None:
            face, d2 = model.L_S.locate(p)
            depth += d2
            stats.ls_fallbacks += 1
        else:
            stats.li_answers += 1
        stats.depths.append(depth)
        out.append(face)
    return out, stats


def step2_conflicts(model: TrainedModel, I, tris, stats: OperationStats = None):
    """Conflict index of the inputs against the trained diagram, and the set R."""
    stats = stats if stats is not None else OperationStats()
    vorS = model.vorS
    labels = input_labels(len(I))
    conf = {}
    for lab, p, t in zip(labels, I, tris):
        _, u, v = vorS.triangles[t]
        if vorS.conflicts(u, p):
            seed = u
        elif vorS.conflicts(v, p):
            seed = v
        else:
            stats.seed_fallbacks += 1
            seed = locate_seed(vorS, p)
        conf[lab] = conflict_region(vorS, p, seed)
        stats.conflict_sizes.append(len(conf[lab]))
    ci = ConflictIndex.from_conflicts(dict(zip(labels, tris)), conf)
    R = set(model.root_reps())
    for k in ci.Z:
        R.update(s for s in key_sites(k) if not vorS.is_dummy(s))
    stats.R_size = len(R)
    stats.z_square = ci.z_square()
    return ci, sorted(R)


def step3_compress(model: TrainedModel, R) -> CompressedTree:
    return compress_to_subset(model.tree, model.clusters, R)


def step4_nn(model: TrainedModel, T: CompressedTree):
    """1-NN lists of the leaves of T, or None when too few to ask."""
    if len(T.labels()) < 2:
        return None
    return knn_graph(T, 1, model.gauge)


def step5_vornn(g, frame, points, T: CompressedTree, rng=None, base=16, stats=None, nn=None):
    """Diagram of the leaves of T by nearest-neighbour sampling and reinsertion.

    Below ``base`` sites the diagram is built directly.  Otherwise a maximal
    matching of the 1-NN graph keeps one random endpoint per matched pair,
    each unmatched point stays with probability 1/2, the sample is solved
    recursively on its compressed tree, and the rest are inserted in
    breadth-first order of the 1-NN graph, seeded from the cell of the
    neighbour they were reached from.
    """
    rng = rng or random.Random(0)
    st = stats if stats is not None else {}
    for key in ("depth", "created", "seed_fallbacks", "recreated", "levels"):
        st.setdefault(key, 0)
    Y = {s: points[s] for s in T.labels()}
    return _vornn(g, frame, Y, T, rng, base, st, 0, nn)


def _vornn(g, frame, Y, T, rng, base, st, depth, nn):
    st["depth"] = max(st["depth"], depth)
    st["levels"] += 1
    if len(Y) <= base:
        sub = {}
        d = diagram_of(g, frame, Y, rng=random.Random(rng.random()), stats=sub)
        st["created"] += sub.get("created", 0)
        return d
    if nn is None:
        nn = knn_graph(T, 1, g)
    edges = sorted({(min(a, b[0]), max(a, b[0])) for a, b in nn.items()})
    rng.shuffle(edges)
    matched = set()
    X = set()
    for a, b in edges:
        if a in matched or b in matched:
            continue
        matched.update((a, b))
        X.add(a if rng.random() < 0.5 else b)
    for y in sorted(Y):
        if y not in matched and rng.random() < 0.5:
            X.add(y)
    TX = mark_and_prune(T, X) if len(X) > 1 else None
    if TX is None:
        dX = diagram_of(g, frame, {x: Y[x] for x in X}, rng=random.Random(rng.random()))
    else:
        dX = _vornn(g, frame, {x: Y[x] for x in X}, TX, rng, base, st, depth + 1, None)
    adj = defaultdict(list)
    for a, b in sorted(edges):
        adj[a].append(b)
        adj[b].append(a)
    via = {}
    dq = deque(sorted(X))
    seen = set(X)
    order = []
    while dq:
        u = dq.popleft()
        for w in adj[u]:
            if w not in seen:
                seen.add(w)
                via[w] = u
                order.append(w)
                dq.append(w)
    track = {"track": True}
    destroyed = set()
    for y in order:
        p = Y[y]
        seed = None
        for k in dX.cycles[via[y]]:
            if dX.conflicts(k, p):
                seed = k
                break
        if seed is None:
            st["seed_fallbacks"] += 1
            seed = locate_seed(dX, p, via[y])
        track["created_keys"] = []
        track["destroyed_keys"] = []
        insert_site(dX, p, seed, label=y, in_place=True, stats=track)
        st["created"] += len(track["created_keys"])
        st["recreated"] += sum(1 for k in track["created_keys"] if k in destroyed)
        destroyed.update(track["destroyed_keys"])
    return dX


def step6_merge(vorR: VorDiagram, ci: ConflictIndex, I_pts, stats=None, verify=True):
    """Diagram over R and the inputs; only triangles at conflicting vertices change."""
    return merge_local(vorR, {lab: ci.conf[lab] for lab in I_pts}, I_pts, stats=stats,
                       verify=verify)


def step7_split(vorRI: VorDiagram, labels, rng=None, stats=None):
    """(diagram over I, diagram over R) from the labelled joint diagram."""
    return split_labeled(vorRI, labels, rng, stats)


def place_inputs(model: TrainedModel, I):
    """(positions used inside the run, positions reported in the output).

    The reported positions match ``brute_force_voronoi`` on the inputs alone.
    An input still on a special line of a trained site then moves once more,
    so the joint diagrams used by the merge stay non-degenerate.  That second
    move is far smaller than the first, so it cannot undo how the first pass
    separated two inputs, and the output is moved back afterwards.
    """
    g, frame, S = model.gauge, model.frame, model.vorS.points
    first = place_sites(g, frame, dict(enumerate(frame.dummies)), I)
    lines = LineIndex(g, list(S.values()) + list(first.values()))
    taken = {p: lab for lab, p in first.items()}
    taken.update((p, s) for s, p in S.items())
    out = {}
    for lab in sorted(first):
        p = first[lab]
        # inputs on a trained site or on another input are collapsed later
        if taken.get(p) == lab:
            lines.remove(p)
            q = nudge_site(lines, frame, p, lab, taken, step=FINE_NUDGE)
            lines.add(q)
            if q != p:
                del taken[p]
                taken[q] = lab
            p = q
        out[lab] = p
    return out, first


def _move_back(d: VorDiagram, moved):
    """Put sites back at the given positions and recompute their vertices."""
    if not moved:
        return
    d.points.update(moved)
    for lab in moved:
        for key in d.cycles[lab]:
            d.verts[key] = make_vertex(d.gauge, d.points, key)
    d.triangles = None
    d._pindex = None
    d._lines = None


def run(model: TrainedModel, I, rng=None, verify=False):
    """Diagram of instance I (with the frame dummies) and its operation stats."""
    rng = rng or random.Random(0)
    st = OperationStats()
    I = [(float(p[0]), float(p[1])) for p in I]
    labels = input_labels(len(I))
    for i, p in enumerate(I):
        if not model.frame.contains(p):
            raise PointOutsideFrame(f"input point {i} at {p} lies outside the frame box")
    I_pts, shown = place_inputs(model, dict(zip(labels, I)))
    I = [I_pts[lab] for lab in labels]

    t0 = time.perf_counter()
    tris, _ = step1_locate(model, I, st)
    t1 = time.perf_counter()
    ci, R = step2_conflicts(model, I, tris, st)
    t2 = time.perf_counter()
    T = step3_compress(model, R)
    st.tree_size = len(T.preorder())
    t3 = time.perf_counter()
    nn = step4_nn(model, T)
    t4 = time.perf_counter()
    vs = {}
    vorR = step5_vornn(model.gauge, model.frame, model.S, T, random.Random(rng.random()),
                       stats=vs, nn=nn)
    st.vornn_depth = vs["depth"]
    st.vornn_created = vs["created"]
    st.vornn_seed_fallbacks = vs["seed_fallbacks"]
    st.vornn_recreated = vs["recreated"]
    t5 = time.perf_counter()
    # an input sitting exactly on a trained site would duplicate a site of R;
    # such inputs skip the merge and are inserted into the output at the end
    site_at = _point_index(model.vorS)
    coincident = [lab for lab in labels if I_pts[lab] in site_at]
    merged = I_pts
    if coincident:
        merged = {lab: p for lab, p in I_pts.items() if p not in site_at}
    st.coincident = len(coincident)
    ms = {}
    vorRI = step6_merge(vorR, ci, merged, stats=ms, verify=verify)
    st.merge_triangles = len(ms.get("recomputed_triangles", ()))
    st.U_R = len(ms.get("U_R", ()))
    t6 = time.perf_counter()
    lab = {s: "R" for s in R}
    lab.update({s: "I" for s in merged})
    ss = {}
    dI, _ = step7_split(vorRI, lab, random.Random(rng.random()), ss)
    for s in coincident:
        insert_site(dI, I_pts[s], label=s, in_place=True)
    _move_back(dI, {lab: shown[lab] for lab in labels if shown[lab] != I_pts[lab]})
    st.split_depth = ss.get("depth", 0)
    st.split_fallback = ss.get("fallback", False)
    t7 = time.perf_counter()
    st.times = {"step1": t1 - t0, "step2": t2 - t1, "step3": t3 - t2, "step4": t4 - t3,
                "step5": t5 - t4, "step6": t6 - t5, "step7": t7 - t6}
    return dI, st


# ---------------------------------------------------------------------------
# the locating certifier
# ---------------------------------------------------------------------------

@dataclass
class CertifyReport:
    tris: list
    comparisons: int
    visited_late: int = 0
    vi2_failures: int = 0
    claim_failures: int = 0
    region_branch: int = 0
    scan_misses: int = 0


class _Counter:
    __slots__ = ("n",)

    def __init__(self):
        self.n = 0


def _bfs(d, q, seed, cnt):
    found = {seed}
    stack = [seed]
    rejected = set()
    while stack:
        key = stack.pop()
        for w in d.vertex_neighbors(key):
            if w in found or w in rejected:
                continue
            cnt.n += 1
            if d.conflicts(w, q):
                found.add(w)
                stack.append(w)
            else:
                rejected.add(w)
    return found


def _triangle_of(model, q, region, cnt):
    vorS = model.vorS
    cands = sorted({t for k in region for t in model.vertex_tris.get(k, ())})
    for closed in (False, True):
        for t in cands:
            s, u, v = vorS.triangles[t]
            cnt.n += 1
            if in_triangle(vorS, vorS.points[s], u, v, q, closed=closed):
                return t
    return None


def certify_entropy(model: TrainedModel, I, vorI=None, rng=None):
    """Locate every input point again by walking outward from B.

    The diagram over B and I is formed first by inserting I into the trained
    diagram over B; that step is preprocessing and is not counted.  Then a
    queue seeded with B visits input points through their neighbours:
    from a site of B, a conflicting vertex on its B-cell is found by a
    cyclic scan; from an input point p, the vertices of its cell in the
    trained diagram plus p locate each newly met neighbour on an edge of
    the trained diagram.  Each hit is finished off in the trained diagram,
    by a conflict search when the vertex is a trained one, else by the
    boundary homothets and interior map of its region.  Returns the
    triangle per input and the number of predicate evaluations.
    """
    g = model.gauge
    vorS = model.vorS
    dv = model.division
    vorB = dv.vorB
    if not model.vertex_tris:
        model.index_triangles()
    labels = input_labels(len(I))
    Ipts, _ = place_inputs(model, dict(zip(labels, I)))
    dBI = vorB.copy()
    last = None
    for lab in labels:
        p = Ipts[lab]
        seed = locate_seed(dBI, p, last)
        insert_site(dBI, p, seed, label=lab, in_place=True)
        last = lab
    allpts = dict(vorS.points)
    allpts.update(Ipts)
    work = VorDiagram(g, model.frame, allpts, {}, {}, vorS.dummies)
    cnt = _Counter()
    rep = CertifyReport([None] * len(I), 0)
    Bset = set(dv.B)
    v_of = {}
    vs_of = {}
    visited = set()
    queue = deque(sorted(Bset))

    def _triangle_or_scan(q, region):
        t = _triangle_of(model, q, region, cnt)
        if t is None:
            rep.claim_failures += 1
            t, depth = model.L_S.locate(q)
            cnt.n += depth
        return t

    def stage2(lab, v, in_vs):
        q = Ipts[lab]
        if in_vs:
            region = _bfs(vorS, q, v, cnt)
            return _triangle_or_scan(q, region), region
        rep.region_branch += 1
        reg = dv.regions[dv.region_of_vertex[v]]
        hit = [0]
        w = reg.bvh.first_hit(q, hit)
        cnt.n += hit[0]
        if w is not None:
            region = _bfs(vorS, q, w, cnt)
            return _triangle_or_scan(q, region), region
        t, depth = reg.locate(q)
        cnt.n += depth
        if t is None:
            rep.claim_failures += 1
            t, depth = model.L_S.locate(q)
            cnt.n += depth
        return t, None

    def finish(lab, t, region):
        rep.tris[lab - LABEL_BASE] = t
        visited.add(lab)
        queue.append(lab)
        if region is not None:
            vs_of[lab] = region

    while queue:
        p = queue.popleft()
        if p in Bset:
            cyc = [k for k in vorB.cycles[p] if vorB.verts[k].lam is not None]
            ptr = 0
            for q in _cyclic_neighbors(dBI, p):
                if q not in Ipts or q in visited:
                    continue
                v = None
                for step in range(len(cyc)):
                    k = cyc[(ptr + step) % len(cyc)]
                    cnt.n += 1
                    if vorB.conflicts(k, Ipts[q]):
                        v = k
                        ptr = (ptr + step) % len(cyc)
                        break
                if v is None:
                    rep.scan_misses += 1
                    continue
                t, region = stage2(q, v, dv.in_VS[v])
                _, u, u2 = vorS.triangles[t]
                cnt.n += 1
                v_of[q] = u if vorS.conflicts(u, Ipts[q]) else u2
                finish(q, t, region)
            continue
        # p is an input point with a known trained vertex v_of[p]
        pp = Ipts[p]
        region = vs_of.get(p)
        if region is None:
            region = _bfs(vorS, pp, v_of[p], cnt)
            vs_of[p] = region
        local = sorted({s for a, b in _new_vertex_keys(vorS, p, region).values()
                        for s in (a, b)})
        cand = sorted(set(local) | dBI.site_neighbors(p))
        nbrs = _local_neighbors(g, allpts, p, cand, cnt)
        fresh = [q for q in nbrs if q in Ipts and q not in visited]
        if not fresh:
            continue
        corners = _cell_vertices(g, allpts, p, local, cnt)
        near = set(region)
        for k in region:
            near.update(vorS.vertex_neighbors(k))
        for q in fresh:
            pq = Ipts[q]
            v = None
            for key, (a, b) in corners:
                if key not in work.verts:
                    work.verts[key] = make_vertex(g, allpts, key)
                cnt.n += 1
                if not work.conflicts(key, pq):
                    continue
                for k in sorted(near):
                    ks = key_sites(k)
                    if a in ks and b in ks and vorS.verts[k].lam is not None:
                        cnt.n += 1
                        if vorS.conflicts(k, pq):
                            v = k
                            break
                if v is not None:
                    break
            if v is None:
                rep.vi2_failures += 1
                continue
            t, reg = stage2(q, v, True)
            v_of[q] = v
            finish(q, t, reg)
    for i, lab in enumerate(labels):
        if rep.tris[i] is None:
            rep.visited_late += 1
            t, depth = model.L_S.locate(Ipts[lab])
            cnt.n += depth
            rep.tris[i] = t
    rep.comparisons = cnt.n
    return rep


def _cyclic_neighbors(d, p):
    """Neighbours of p in the order they appear around its cell."""
    out = []
    seen = set()
    for k in d.cycles[p]:
        for s in key_sites(k):
            if s != p and s not in seen:
                seen.add(s)
                out.append(s)
    return out


def _local_neighbors(g, points, p, cand, cnt):
    """Sites of ``cand`` sharing an edge with p in the diagram of {p} and cand."""
    out = []
    for q in cand:
        others = [c for c in cand if c != q]
        a, b = (p, q) if p < q else (q, p)
        cnt.n += len(others)
        if pair_edge(g, points, a, b, others) is not None:
            out.append(q)
    return out


def _cell_vertices(g, points, p, local, cnt):
    """Vertices (p, a, b) of p's cell among ``local``, with their pair (a, b)."""
    out = {}
    for q in local:
        others = [c for c in local if c != q]
        a, b = (p, q) if p < q else (q, p)
        cnt.n += len(others)
        ext = pair_edge(g, points, a, b, others)
        if ext is None:
            continue
        for end in (ext[1], ext[3]):
            if end is not None:
                key = vkey(p, q, end)
                out[key] = tuple(sorted((q, end)))
    return sorted(out.items())


__all__ = ["LABEL_BASE", "input_labels", "place_inputs", "OperationStats", "ConflictIndex", "step1_locate",
           "step2_conflicts", "step3_compress", "step4_nn", "step5_vornn", "step6_merge",
           "step7_split", "run", "certify_entropy", "CertifyReport"]
