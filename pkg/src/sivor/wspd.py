"""Well-separated pairs over a compressed net-tree and kNN graphs from them."""
from __future__ import annotations

import bisect
import math
from dataclasses import dataclass

import numpy as np

from .errors import KTooLarge
from .gauge import ConvexGauge
from .nettree import _Tree, metric_matrix

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class WspdPair:
    u: int
    v: int


def wspd_build(tx: _Tree, c: float, g: ConvexGauge):
    """c-WSPD of the leaves of ``tx`` by the recursive pair split.

    The node with the higher level (the left one on ties) is split until
    (4 tau / (tau - 1)) tau^l < d(p_u, p_v) / (c + 2).
    """
    if c < 1:
        raise ValueError("separation c must be at least 1")
    tau = tx.tau
    coef = 4.0 * tau / (tau - 1)
    rank = {u: i for i, u in enumerate(tx.preorder())}
    dist_of = tx.metric(g)
    rep, lev = tx.rep, tx.lev
    out = {}
    stack = [(tx.root, tx.root)]
    while stack:
        u, v = stack.pop()
        lu, lv = lev[u], lev[v]
        if lu < lv or (lu == lv and rank[u] > rank[v]):
            u, v = v, u
            lu, lv = lv, lu
        dist = dist_of(rep[u], rep[v])
        if u != v and coef * tau ** lu < dist / (c + 2):
            key = (u, v) if rank[u] < rank[v] else (v, u)
            out[key] = WspdPair(*key)
        else:
            for w in tx.children(u):
                stack.append((w, v))
    return list(out.values())


def check_wspd(tx: _Tree, pairs, c: float, g: ConvexGauge):
    """Exhaustive coverage and separation check; returns a list of problems."""
    labels = list(tx.labels())
    pos = {s: i for i, s in enumerate(labels)}
    D = metric_matrix(g, np.array([tx.points[s] for s in labels]))
    n = len(labels)
    cover = np.zeros((n, n), dtype=np.int64)
    bad = []
    for pr in pairs:
        A = [pos[s] for s in tx.leaves_under(pr.u)]
        B = [pos[s] for s in tx.leaves_under(pr.v)]
        if set(A) & set(B):
            bad.append(f"pair {pr} has overlapping sides")
            continue
        gap = D[np.ix_(A, B)].min()
        diam = max(D[np.ix_(A, A)].max(), D[np.ix_(B, B)].max())
        if not diam < gap / c:
            bad.append(f"pair {pr}: diameter {diam} not below {gap}/{c}")
        cover[np.ix_(A, B)] += 1
        cover[np.ix_(B, A)] += 1
    np.fill_diagonal(cover, 1)
    miss = np.argwhere(cover == 0)
    if len(miss):
        i, j = miss[0]
        bad.append(f"{len(miss) // 2} point pairs uncovered, e.g. {labels[i]}, {labels[j]}")
    return bad


class ConeFrame:
    """Points on the boundary of the metric ball cutting the plane into cones.

    Consecutive points are between 1/8 and 1/4 apart under the metric.
    """

    def __init__(self, g: ConvexGauge):
        self.g = g
        verts = g.vertices_Qhat
        k = len(verts)
        # boundary arc length under the metric, per edge
        lens = [g.mdist(verts[i], verts[(i + 1) % k]) for i in range(k)]
        total = sum(lens)
        count = math.ceil(total / 0.25)
        while True:
            step = total / count
            xi = []
            for j in range(count):
                s = j * step
                e = 0
                while e < k - 1 and s > lens[e]:
                    s -= lens[e]
                    e += 1
                a, b = verts[e], verts[(e + 1) % k]
                f = min(1.0, s / lens[e])
                xi.append((a[0] + f * (b[0] - a[0]), a[1] + f * (b[1] - a[1])))
            xi.reverse()  # clockwise
            gaps = [g.mdist(xi[j], xi[(j + 1) % count]) for j in range(count)]
            if all(0.125 <= x <= 0.25 for x in gaps):
                break
            count += 1
        self.xi = xi
        self.gaps = gaps
        # cone i spans the angles from ray i+1 up to ray i
        ang = sorted((math.atan2(p[1], p[0]) % TWO_PI, i) for i, p in enumerate(xi))
        self._angles = [a for a, _ in ang]
        self._order = [i for _, i in ang]

    def __len__(self):
        return len(self.xi)

    def cone_of(self, q0, p):
        """Index i of the cone between rays i and i+1 (clockwise) holding p."""
        x, y = p[0] - q0[0], p[1] - q0[1]
        if x == 0 and y == 0:
            return 0
        t = math.atan2(y, x) % TWO_PI
        j = bisect.bisect_left(self._angles, t)
        return self._order[j % len(self._order)]


_FRAMES = {}


def cone_frame(g: ConvexGauge) -> ConeFrame:
    """Shared cone frame per gauge."""
    fr = _FRAMES.get(g)
    if fr is None:
        fr = _FRAMES[g] = ConeFrame(g)
    return fr


def prune_cones(g, frame: ConeFrame, q0, cand, k, dist=None):
    """Keep, per cone around q0, the points with fewer than k others at most as far.

    ``cand`` holds (label, point) pairs; ``dist`` optionally gives the metric
    distance from q0 per label.
    """
    groups = {}
    for p in cand:
        groups.setdefault(frame.cone_of(q0, p[1]), []).append(p)
    out = []
    for grp in groups.values():
        if len(grp) <= k:
            out.extend(grp)
            continue
        ds = [dist(p[0]) if dist else g.mdist(q0, p[1]) for p in grp]
        for i, p in enumerate(grp):
            closer = 0
            for j, dj in enumerate(ds):
                if j != i and dj <= ds[i]:
                    closer += 1
            if closer < k:
                out.append(p)
    return out


def knn_graph(tx: _Tree, k: int, g: ConvexGauge, frame: ConeFrame = None):
    """Exact k-nearest-neighbour lists of the leaves of ``tx`` under the metric.

    Candidate sets are pushed down in preorder from a 4-WSPD and pruned per
    cone; each point then picks its k nearest among the leaves whose
    candidate set names it.  Returns {label: [labels by distance]}.
    """
    labels = tx.labels()
    if k < 1 or k >= len(labels):
        raise KTooLarge(f"k={k} needs at least k+1 points, have {len(labels)}")
    frame = frame or cone_frame(g)
    pts = tx.points
    dist_of = tx.metric(g)
    partners = {}
    for pr in wspd_build(tx, 4, g):
        partners.setdefault(pr.u, []).append(pr.v)
        partners.setdefault(pr.v, []).append(pr.u)
    par = tx.parent
    C = {}
    for u in tx.preorder():
        base = C[par[u]] if par[u] is not None else []
        cand = {s: None for s, _ in base}
        for w in partners.get(u, ()):
            Pw = tx.leaves_under(w)
            if len(Pw) <= k:
                cand.update((s, None) for s in Pw)
        s0 = tx.leaves_under(u)[0]
        C[u] = prune_cones(g, frame, pts[s0], [(s, pts[s]) for s in cand], k,
                           lambda s, s0=s0: dist_of(s0, s))
    L = {s: set() for s in labels}
    for leaf, lab in tx.leaf_label.items():
        for s, _ in C[leaf]:
            L[s].add(lab)
    out = {}
    for s in labels:
        ranked = sorted(L[s], key=lambda t: (dist_of(s, t), t))
        out[s] = ranked[:k]
    return out


def knn_oracle(g: ConvexGauge, points, k):
    """All-pairs k-nearest neighbours, ties broken by label."""
    labels = list(points)
    out = {}
    for s in labels:
        ps = points[s]
        ranked = sorted((t for t in labels if t != s), key=lambda t: (g.mdist(ps, points[t]), t))
        out[s] = ranked[:k]
    return out


def nn_graph_checks(graph, d):
    """Every 1-NN edge must join Voronoi neighbours of ``d``; reports max degree."""
    edges = {frozenset((s, nbrs[0])) for s, nbrs in graph.items() if nbrs}
    deg = {}
    bad = []
    for e in edges:
        s, t = sorted(e)
        deg[s] = deg.get(s, 0) + 1
        deg[t] = deg.get(t, 0) + 1
        if t not in d.site_neighbors(s):
            bad.append((s, t))
    return {"non_adjacent": bad, "max_degree": max(deg.values(), default=0)}


__all__ = ["WspdPair", "wspd_build", "check_wspd", "ConeFrame", "cone_frame", "prune_cones",
           "knn_graph", "knn_oracle", "nn_graph_checks"]
