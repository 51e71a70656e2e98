"""Net-trees under the symmetric gauge metric, clusters and compression.

A tree stores nodes by integer id.  Each node has a level (``-inf`` for
leaves), a representative point label and an ordered child tuple.  Leaves
are in bijection with the point labels.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DifferentClusters, MissingClusterRootRep, TauTooSmall
from .gauge import ConvexGauge
from .veb import VEB

NEG_INF = float("-inf")


def metric_matrix(g: ConvexGauge, pts):
    """All pairwise metric distances of an (n, 2) array."""
    a = np.asarray(g.normals_Qhat, dtype=float)
    proj = np.asarray(pts, dtype=float) @ a.T
    return (proj[None, :, :] - proj[:, None, :]).max(axis=2)


class _Tree:
    """Shared read-only view over ``kids``/``lev``/``rep``/``leaf_label``."""

    def __init__(self, points, root, kids, lev, rep, leaf_label, tau):
        self.points = points
        self.root = root
        self.kids = kids
        self.lev = lev
        self.rep = rep
        self.leaf_label = leaf_label
        self.tau = tau
        self._leaves = {}
        self._parent = None
        self._pre = None

    def children(self, u):
        return self.kids.get(u, ())

    def is_leaf(self, u):
        return u in self.leaf_label

    @property
    def parent(self):
        if self._parent is None:
            par = {self.root: None}
            for u, ch in self.kids.items():
                for w in ch:
                    par[w] = u
            self._parent = par
        return self._parent

    def preorder(self):
        if self._pre is None:
            out, stack = [], [self.root]
            while stack:
                u = stack.pop()
                out.append(u)
                stack.extend(reversed(self.children(u)))
            self._pre = out
        return self._pre

    def nodes(self):
        return self.preorder()

    def leaves_under(self, u):
        """Point labels of the leaves below u, left to right."""
        got = self._leaves.get(u)
        if got is None:
            if u in self.leaf_label:
                got = (self.leaf_label[u],)
            else:
                out = []
                stack = [u]
                while stack:
                    w = stack.pop()
                    if w in self.leaf_label:
                        out.append(self.leaf_label[w])
                    else:
                        stack.extend(reversed(self.children(w)))
                got = tuple(out)
            self._leaves[u] = got
        return got

    def labels(self):
        return self.leaves_under(self.root)

    def leaf_of(self, label):
        inv = getattr(self, "_leaf_of", None)
        if inv is None:
            inv = {lab: u for u, lab in self.leaf_label.items()}
            self._leaf_of = inv
        return inv[label]

    def metric(self, g):
        """Label-to-label metric distance, read from the cached matrix when built."""
        src = getattr(self, "source", self)
        cached = getattr(src, "matrix", None)
        if cached is None:
            pts = self.points
            return lambda a, b: g.mdist(pts[a], pts[b])
        pos = getattr(src, "_pos", None)
        if pos is None:
            pos = {s: i for i, s in enumerate(cached[0])}
            src._pos = pos
        D = cached[1]
        return lambda a, b: D.item(pos[a], pos[b])

    def shape(self):
        """Ordered nested structure of node ids, used for tree equality."""
        return {u: tuple(self.children(u)) for u in self.preorder()}

    def to_json(self):
        return {"root": self.root,
                "nodes": [{"id": u, "level": None if self.lev[u] == NEG_INF else self.lev[u],
                           "rep": self.rep[u], "children": list(self.children(u))}
                          for u in self.preorder()]}


class NetTree(_Tree):
    """Net-tree over a label-to-point mapping; node ids are 0..N-1."""

    @property
    def size(self):
        return len(self.lev)


class CompressedTree(_Tree):
    """Compression of a source net-tree; node ids are source node ids."""

    def __init__(self, source, root, kids, leaf_label):
        super().__init__(source.points, root, kids, source.lev, source.rep, leaf_label, source.tau)
        self.source = source

    def __eq__(self, other):
        return (isinstance(other, CompressedTree) and self.root == other.root
                and self.shape() == other.shape()
                and self.leaf_label == other.leaf_label)

    def __hash__(self):
        return hash((self.root, len(self.leaf_label)))


# ---------------------------------------------------------------------------
# construction
# ---------------------------------------------------------------------------

def build_net_tree(g: ConvexGauge, points, tau: int = 11) -> NetTree:
    """Net-tree from nested nets N_top ⊆ ... ⊆ N_bottom = all points.

    N_l is a maximal tau^l-separated superset of N_(l+1); each point that
    first appears in N_l hangs below its nearest member of N_(l+1).  Runs of
    single-child nodes are collapsed onto their lowest level, and a point's
    chain ends in its leaf.
    """
    if tau < 11:
        raise TauTooSmall(f"tau={tau} < 11")
    labels = list(points)
    n = len(labels)
    if n == 0:
        raise ValueError("net-tree of an empty point set")
    pts = np.array([points[s] for s in labels], dtype=float)
    if n == 1:
        return NetTree(dict(points), 0, {}, [NEG_INF], [labels[0]], {0: labels[0]}, tau)
    D = metric_matrix(g, pts)
    dmax = float(D.max())
    if dmax <= 0.0:
        raise ValueError("net-tree points must be distinct")
    top = math.floor(math.log(dmax, tau)) + 1
    while tau ** top <= dmax:
        top += 1
    # top[i]: highest level of point i; parent[i]: index it hangs below
    in_net = np.zeros(n, dtype=bool)
    in_net[0] = True
    top_of = np.full(n, -10**9, dtype=np.int64)
    top_of[0] = top
    parent = np.full(n, -1, dtype=np.int64)
    mind = D[0].copy()
    level = top
    members = [0]
    while not in_net.all():
        level -= 1
        r = float(tau) ** level
        fresh = []
        for i in np.flatnonzero(~in_net):
            if mind[i] >= r:
                fresh.append(int(i))
                in_net[i] = True
                mind = np.minimum(mind, D[i])
        if fresh:
            idx = np.array(sorted(members))
            for i in fresh:
                parent[i] = int(idx[int(np.argmin(D[i, idx]))])
                top_of[i] = level
            members.extend(fresh)
    # branching levels of each point: l such that a point with top l-1 hangs below it
    branch = [[] for _ in range(n)]
    below = {}
    for i in range(n):
        if parent[i] >= 0:
            lv = int(top_of[i]) + 1
            below.setdefault((int(parent[i]), lv), []).append(i)
    for (p, lv) in below:
        branch[p].append(lv)
    lev, rep, kids, leaf_label = [], [], {}, {}
    # node ids per point: chain[i] = [(level, node id), ...] top-down then leaf
    chain = []
    for i in range(n):
        ids = []
        for lv in sorted(branch[i], reverse=True):
            ids.append((lv, len(lev)))
            lev.append(lv)
            rep.append(labels[i])
        ids.append((NEG_INF, len(lev)))
        lev.append(NEG_INF)
        rep.append(labels[i])
        leaf_label[ids[-1][1]] = labels[i]
        chain.append(ids)

    def head(i):
        return chain[i][0][1]

    for i in range(n):
        ids = chain[i]
        for j in range(len(ids) - 1):
            lv, u = ids[j]
            kids[u] = (ids[j + 1][1],) + tuple(head(q) for q in sorted(below[(i, lv)]))
    root = head(0)
    t = NetTree(dict(points), root, kids, lev, rep, leaf_label, tau)
    t.matrix = (labels, D)
    return t


# ---------------------------------------------------------------------------
# property checks
# ---------------------------------------------------------------------------

def verify_net_tree(t: _Tree, g: ConvexGauge):
    """Check properties (a)-(f); returns None or the first violation text."""
    tau = t.tau
    par = t.parent
    allp = t.points
    labels = list(allp)
    pts = np.array([allp[s] for s in labels], dtype=float)
    D = metric_matrix(g, pts)
    pos = {s: i for i, s in enumerate(labels)}
    leaf_set = sorted(t.leaf_label.values())
    if sorted(labels) != leaf_set:
        return "leaves are not in bijection with the points"
    for u in t.preorder():
        Pu = t.leaves_under(u)
        ch = t.children(u)
        if t.rep[u] not in Pu:
            return f"(a) node {u}: representative outside its leaf set"
        p = par[u]
        if t.is_leaf(u):
            if t.lev[u] != NEG_INF or ch:
                return f"(b) leaf {u} has level {t.lev[u]} or children"
        else:
            if len(ch) < 2:
                return f"(c) internal node {u} has {len(ch)} children"
            if not any(t.rep[w] == t.rep[u] for w in ch):
                return f"(f) node {u}: no child shares its representative"
            radius = 2 * tau / (tau - 1) * tau ** t.lev[u]
            for s in Pu:
                if g.mdist(allp[t.rep[u]], allp[s]) > radius:
                    return f"(d) node {u}: point {s} outside the covering ball"
        if p is not None:
            if not t.lev[u] < t.lev[p]:
                return f"(b) node {u} level {t.lev[u]} not below parent level {t.lev[p]}"
            radius = (tau - 5) / (2 * tau - 2) * tau ** (t.lev[p] - 1)
            row = D[pos[t.rep[u]]]
            inside = {labels[i] for i in np.flatnonzero(row <= radius * (1 + 1e-12))}
            missing = inside.difference(Pu)
            for s in sorted(missing):
                if g.mdist(allp[t.rep[u]], allp[s]) <= radius:
                    return f"(e) node {u}: point {s} in the packing ball but not below"
    return None


# ---------------------------------------------------------------------------
# clusters
# ---------------------------------------------------------------------------

@dataclass
class Cluster:
    """A piece of the net-tree: its nodes, portals to earlier clusters, NCA data."""
    index: int
    root: int
    nodes: list
    leaves: list
    portals: list
    pre: dict = field(default_factory=dict)
    ino: dict = field(default_factory=dict)
    post: dict = field(default_factory=dict)
    depth: dict = field(default_factory=dict)
    units: dict = field(default_factory=dict)
    euler: list = field(default_factory=list)
    first: dict = field(default_factory=dict)
    table: list = field(default_factory=list)
    eb: VEB = None

    def contains(self, u):
        return u in self.pre

    def is_ancestor(self, u, v):
        """u is v or an ancestor of v (pre/post interval test)."""
        return self.pre[u] <= self.pre[v] and self.post[v] <= self.post[u]


def partition_clusters(t: _Tree, m: int):
    """Greedy left-to-right clustering of the leaves, m at a time.

    The lowest common ancestor v of the leftmost m unclustered leaves is
    taken; every node below v that is not yet clustered joins the new
    cluster.  Roots of earlier clusters hanging below it become its portals.
    """
    if m < 1:
        raise ValueError("cluster size m must be positive")
    order = t.preorder()
    leaves = [u for u in order if t.is_leaf(u)]
    par = t.parent
    depth = {t.root: 0}
    for u in order:
        for w in t.children(u):
            depth[w] = depth[u] + 1
    owner = {}
    clusters = []
    start = 0
    while start < len(leaves):
        sel = leaves[start:start + m]
        v = sel[0]
        for w in sel[1:]:
            a, b = v, w
            while depth[a] > depth[b]:
                a = par[a]
            while depth[b] > depth[a]:
                b = par[b]
            while a != b:
                a, b = par[a], par[b]
            v = a
        idx = len(clusters)
        nodes, own, portals = [], [], []
        stack = [v]
        while stack:
            u = stack.pop()
            if u in owner:
                portals.append(u)
                continue
            owner[u] = idx
            nodes.append(u)
            if t.is_leaf(u):
                own.append(u)
            stack.extend(reversed(t.children(u)))
        c = Cluster(idx, v, nodes, own, portals)
        _index_cluster(t, c, owner)
        clusters.append(c)
        start = max(i for i, u in enumerate(leaves) if owner.get(u) == idx) + 1 \
            if own else start + 1
    t.cluster_of = owner
    return clusters


def _index_cluster(t, c, owner):
    """Pre/in/post ranks, unit ranks and the Euler-tour sparse table."""
    portal = set(c.portals)
    counter = {"pre": 0, "post": 0, "unit": 0}
    euler = []

    def kids(u):
        return () if u in portal else t.children(u)

    # iterative DFS producing pre/post order and the Euler tour
    stack = [(c.root, 0, 0)]
    c.depth[c.root] = 0
    while stack:
        u, i, _ = stack.pop()
        ch = kids(u)
        if i == 0:
            c.pre[u] = counter["pre"]
            counter["pre"] += 1
            c.first[u] = len(euler)
            if not ch:
                c.units[u] = counter["unit"]
                c.ino[u] = counter["unit"]
                counter["unit"] += 1
        euler.append(u)
        if i < len(ch):
            stack.append((u, i + 1, 0))
            w = ch[i]
            c.depth[w] = c.depth[u] + 1
            stack.append((w, 0, 0))
        else:
            c.post[u] = counter["post"]
            counter["post"] += 1
    c.euler = euler
    n = len(euler)
    row = [(c.depth[u], c.pre[u], u) for u in euler]
    table = [row]
    j = 1
    while (1 << j) <= n:
        prev = table[-1]
        half = 1 << (j - 1)
        table.append([min(prev[i], prev[i + half]) for i in range(n - (1 << j) + 1)])
        j += 1
    c.table = table
    c.eb = VEB(max(2, counter["unit"]))


def nca_query(c: Cluster, u, v):
    """Nearest common ancestor of u and v inside cluster c, O(1) per query."""
    if u not in c.first or v not in c.first:
        raise DifferentClusters(f"nodes {u} and {v} are not both in cluster {c.index}")
    i, j = c.first[u], c.first[v]
    if i > j:
        i, j = j, i
    k = (j - i + 1).bit_length() - 1
    return min(c.table[k][i], c.table[k][j - (1 << k) + 1])[2]


# ---------------------------------------------------------------------------
# compression
# ---------------------------------------------------------------------------

def mark_and_prune(t: _Tree, R) -> CompressedTree:
    """Definitional compression: keep ancestors of selected leaves, bypass unary nodes."""
    source = t.source if isinstance(t, CompressedTree) else t
    keep = set(R)
    sel = {u: lab for u, lab in t.leaf_label.items() if lab in keep}
    if not sel:
        raise ValueError("compression to an empty leaf set")
    marked = set()
    par = t.parent
    for u in sel:
        while u is not None and u not in marked:
            marked.add(u)
            u = par[u]
    kids = {}

    def lift(u):
        # follow single marked children down to the first branching node
        while True:
            ch = [w for w in t.children(u) if w in marked]
            if len(ch) == 1:
                u = ch[0]
                continue
            return u, ch

    root, _ = lift(t.root)
    stack = [root]
    while stack:
        u = stack.pop()
        _, ch = lift(u)
        if not ch:
            continue
        out = []
        for w in ch:
            w2, _ = lift(w)
            out.append(w2)
            stack.append(w2)
        kids[u] = tuple(out)
    return CompressedTree(source, root, kids, sel)


def compress_to_subset(t: NetTree, clusters, R) -> CompressedTree:
    """Compression of T_S to the leaves labelled by R, cluster by cluster.

    In each cluster the selected leaves and the portals are sorted through
    the cluster's vEB set by their left-to-right rank, and the spanning
    subtree is assembled with a stack holding its rightmost path: for each
    next unit, the nearest common ancestor x of it and its predecessor is
    found, stack entries deeper than x are popped and attached, and x is
    pushed if it is new.  Cluster results are then glued through portals
    and the nodes above all clusters.
    """
    keep = set(R)
    for c in clusters:
        if t.rep[c.root] not in keep:
            raise MissingClusterRootRep(f"cluster {c.index} root representative "
                                        f"{t.rep[c.root]} is not selected")
    owner = t.cluster_of
    chosen = {}
    for u, lab in t.leaf_label.items():
        if lab in keep:
            chosen.setdefault(owner[u], []).append(u)
    kids = {}
    top_of = {}
    for c in clusters:
        units = chosen.get(c.index, []) + list(c.portals)
        for u in units:
            c.eb.insert(c.units[u])
        by_rank = {c.units[u]: u for u in units}
        ordered = [by_rank[r] for r in c.eb]
        c.eb.clear()
        top_of[c.root] = _stack_build(c, ordered, kids, top_of)
    # nodes above every cluster keep their children, cluster roots replaced
    for u in t.preorder():
        if u in owner:
            continue
        kids[u] = tuple(top_of.get(w, w) for w in t.children(u))
    root = top_of.get(t.root, t.root)
    sel = {u: lab for u, lab in t.leaf_label.items() if lab in keep}
    live = {}
    stack = [root]
    while stack:
        u = stack.pop()
        ch = kids.get(u)
        if ch:
            live[u] = ch
            stack.extend(ch)
    return CompressedTree(t, root, live, sel)


def _stack_build(c, ordered, kids, top_of):
    """Spanning subtree of the ordered units within one cluster; returns its root."""
    def real(u):
        return top_of.get(u, u) if u in c.portals else u

    stack = [ordered[0]]
    for q in ordered[1:]:
        x = nca_query(c, stack[-1], q)
        while len(stack) >= 2 and c.depth[stack[-2]] >= c.depth[x]:
            _attach(kids, stack[-2], real(stack[-1]))
            stack.pop()
        if stack[-1] != x:
            _attach(kids, x, real(stack[-1]))
            stack[-1] = x
        stack.append(q)
    while len(stack) >= 2:
        _attach(kids, stack[-2], real(stack[-1]))
        stack.pop()
    return real(stack[0])


def _attach(kids, parent, child):
    kids[parent] = kids.get(parent, ()) + (child,)


__all__ = ["NetTree", "CompressedTree", "Cluster", "build_net_tree", "verify_net_tree",
           "partition_clusters", "nca_query", "compress_to_subset", "mark_and_prune",
           "metric_matrix", "NEG_INF"]
