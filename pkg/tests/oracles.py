"""Reference computations the tests compare the package against.

Everything here is written from first principles over Fractions or plain
floats and only reads public data off package objects (vertex lists,
point maps, cell cycles), so a bug in the package cannot leak into its
own oracle.
"""
from __future__ import annotations

import math
from collections import deque
from fractions import Fraction


def fr(p):
    return (Fraction(p[0]), Fraction(p[1]))


def cross(o, a, b):
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])


def hull(points):
    """Convex hull, counter-clockwise, collinear points dropped."""
    pts = sorted(set(points))
    if len(pts) <= 2:
        return pts
    lower, upper = [], []
    for p in pts:
        while len(lower) >= 2 and cross(lower[-2], lower[-1], p) <= 0:
            lower.pop()
        lower.append(p)
    for p in reversed(pts):
        while len(upper) >= 2 and cross(upper[-2], upper[-1], p) <= 0:
            upper.pop()
        upper.append(p)
    return lower[:-1] + upper[:-1]


def minkowski(A, B):
    return hull([(a[0] + b[0], a[1] + b[1]) for a in A for b in B])


def normals(poly):
    """n_e with n_e . a = n_e . b = 1 on every edge (a, b) of a CCW polygon."""
    out = []
    k = len(poly)
    for i in range(k):
        a, b = fr(poly[i]), fr(poly[(i + 1) % k])
        c = a[0] * b[1] - a[1] * b[0]
        out.append(((b[1] - a[1]) / c, (a[0] - b[0]) / c))
    return out


class Gauge:
    """Exact gauge of a polygon: gval(v) = max_e n_e . v."""

    def __init__(self, poly):
        self.poly = [fr(p) for p in poly]
        self.n = normals(poly)
        self.nf = [(float(a), float(b)) for a, b in self.n]

    def gval(self, vx, vy):
        return max(a * vx + b * vy for a, b in self.n)

    def fgval(self, vx, vy):
        return max(a * vx + b * vy for a, b in self.nf)

    def dist(self, x, y):
        """Exact min{lam : y in lam*poly + x}."""
        x, y = fr(x), fr(y)
        return self.gval(y[0] - x[0], y[1] - x[1])

    def fdist(self, x, y):
        return self.fgval(y[0] - x[0], y[1] - x[1])


def metric_gauge(Q):
    """Gauge of Q* + Q."""
    qs = [(-x, -y) for x, y in (fr(p) for p in Q)]
    return Gauge(minkowski(qs, [fr(p) for p in Q]))


def in_convex(poly, p, slack=0.0):
    k = len(poly)
    for i in range(k):
        a, b = poly[i], poly[(i + 1) % k]
        if cross(a, b, p) < -slack:
            return False
    return True


def ray_distance(Q, x, y, iters=80):
    """min lam with y in lam*Q + x, by bisection on lam with a containment test."""
    if x == y:
        return 0.0
    lo, hi = 0.0, 1.0
    while not in_convex([(x[0] + hi * a, x[1] + hi * b) for a, b in Q], y):
        hi *= 2
    for _ in range(iters):
        mid = (lo + hi) / 2
        if in_convex([(x[0] + mid * a, x[1] + mid * b) for a, b in Q], y):
            hi = mid
        else:
            lo = mid
    return hi


# -- diagram-level oracles ------------------------------------------------------

def key_sites(key):
    if key[0] == "V":
        return key[1:4]
    return key[1:3]


def vertex_conflicts(G: Gauge, d, key, q, band=1e-9):
    """Closed q-in-clearance test of a diagram vertex, exact inside a float band."""
    v = d.verts[key]
    if v.lam is None:
        return False
    val = G.fgval(v.x - q[0], v.y - q[1]) - v.lam
    scale = 1.0 + v.lam + abs(v.x) + abs(v.y) + abs(q[0]) + abs(q[1])
    if abs(val) > band * scale:
        return val < 0
    x, y, lam = d.exact(key)
    return G.gval(x - Fraction(q[0]), y - Fraction(q[1])) <= lam


def brute_conflict_set(G, d, q):
    return {k for k in d.verts if vertex_conflicts(G, d, k, q)}


def connected_in(d, keys):
    """Whether ``keys`` induce a connected subgraph of the vertex adjacency."""
    keys = set(keys)
    if not keys:
        return True
    start = next(iter(keys))
    seen = {start}
    dq = deque([start])
    while dq:
        u = dq.popleft()
        for w in d.vertex_neighbors(u):
            if w in keys and w not in seen:
                seen.add(w)
                dq.append(w)
    return seen == keys


def nearest_sites(G: Gauge, points, q, tol=1e-12):
    """Labels of the sites at minimum gauge distance to q."""
    ds = {s: G.fdist(p, q) for s, p in points.items()}
    best = min(ds.values())
    return {s for s, v in ds.items() if v <= best + tol * (1 + abs(best))}


def point_in_triangle(a, b, c, q, slack=1e-12):
    o = [cross(a, b, q), cross(b, c, q), cross(c, a, q)]
    return all(x >= -slack for x in o) or all(x <= slack for x in o)


# -- trees -----------------------------------------------------------------------

def walk_nca(parent, u, v):
    anc = set()
    while u is not None:
        anc.add(u)
        u = parent[u]
    while v not in anc:
        v = parent[v]
    return v


def net_tree_violation(t, M: Gauge):
    """Independent check of the six net-tree properties; returns a letter or None."""
    tau = t.tau
    parent = {t.root: None}
    for u in t.preorder():
        for w in t.children(u):
            parent[w] = u
    pts = t.points
    below = {}

    def leaves(u):
        if u not in below:
            if t.is_leaf(u):
                below[u] = {t.leaf_label[u]}
            else:
                below[u] = set().union(*(leaves(w) for w in t.children(u)))
        return below[u]

    for u in t.preorder():
        Pu = leaves(u)
        ch = t.children(u)
        if t.rep[u] not in Pu:
            return "a"
        if t.is_leaf(u):
            if t.lev[u] != float("-inf"):
                return "b"
        else:
            if len(ch) < 2:
                return "c"
            if not any(t.rep[w] == t.rep[u] for w in ch):
                return "f"
            r = 2 * tau / (tau - 1) * tau ** t.lev[u]
            if any(M.fdist(pts[t.rep[u]], pts[s]) > r * (1 + 1e-12) for s in Pu):
                return "d"
        p = parent[u]
        if p is not None:
            if not t.lev[u] < t.lev[p]:
                return "b"
            r = (tau - 5) / (2 * tau - 2) * tau ** (t.lev[p] - 1)
            for s, ps in pts.items():
                if s not in Pu and M.fdist(pts[t.rep[u]], ps) < r * (1 - 1e-12):
                    return "e"
    return None


def pruned_shape(t, R):
    """Mark every ancestor of a selected leaf, then bypass single-child nodes.

    Returns {node: tuple of children} of the compressed tree, rooted at the
    first branching node (or the lone leaf).
    """
    R = set(R)
    marked = set()
    parent = {t.root: None}
    for u in t.preorder():
        for w in t.children(u):
            parent[w] = u
    for u, lab in t.leaf_label.items():
        if lab in R:
            while u is not None and u not in marked:
                marked.add(u)
                u = parent[u]

    def down(u):
        while True:
            ch = [w for w in t.children(u) if w in marked]
            if len(ch) != 1:
                return u, ch
            u = ch[0]

    root, _ = down(t.root)
    shape = {}
    stack = [root]
    while stack:
        u = stack.pop()
        _, ch = down(u)
        kids = tuple(down(w)[0] for w in ch)
        shape[u] = kids
        stack.extend(kids)
    return root, shape


def knn_brute(M: Gauge, points, k):
    out = {}
    for s, ps in points.items():
        ranked = sorted((t for t in points if t != s), key=lambda t: (M.fdist(ps, points[t]), t))
        out[s] = ranked[:k]
    return out


def knn_consistent(M: Gauge, points, got, k, tol=1e-12):
    """got[s] lists k neighbours whose distances match the true k smallest."""
    for s, ps in points.items():
        true = sorted(M.fdist(ps, points[t]) for t in points if t != s)[:k]
        have = [M.fdist(ps, points[t]) for t in got[s]]
        if len(have) != k or s in got[s] or len(set(got[s])) != k:
            return False
        if any(abs(a - b) > tol * (1 + b) for a, b in zip(sorted(have), true)):
            return False
    return True


def wspd_problems(M: Gauge, tree, pairs, c):
    """Exhaustive coverage and separation of a pair list over the tree's leaves."""
    pts = tree.points
    labels = sorted(tree.labels())
    covered = set()
    problems = []
    for pr in pairs:
        A = set(tree.leaves_under(pr.u))
        B = set(tree.leaves_under(pr.v))
        if A & B:
            problems.append(("overlap", pr))
            continue
        gap = min(M.fdist(pts[a], pts[b]) for a in A for b in B)
        diam = max([M.fdist(pts[a], pts[b]) for a in A for b in A]
                   + [M.fdist(pts[a], pts[b]) for a in B for b in B])
        if not diam < gap / c:
            problems.append(("separation", pr))
        for a in A:
            for b in B:
                covered.add((a, b))
                covered.add((b, a))
    for i, a in enumerate(labels):
        for b in labels[i + 1:]:
            if (a, b) not in covered:
                problems.append(("uncovered", (a, b)))
    return problems


def log2(x):
    return math.log(x, 2)
