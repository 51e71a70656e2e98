"""Voronoi diagrams under a polygonal convex distance function.

Sites carry integer labels.  A diagram vertex is identified by a key built
from its defining sites, never by coordinates:

* ``('V', a, b, c)``      Voronoi vertex, labels sorted;
* ``('B', lo, hi, w, k)`` bend of the lo|hi edge where site ``w`` sits at
  vertex ``k`` of the clearance homothet;
* ``('I', lo, hi, e)``    the lo|hi edge leaving to infinity along gauge
  vertex ``e``.

Each cell is stored as the counter-clockwise cycle of its vertex keys.  An
unbounded cell's cycle starts and ends with its two vertices at infinity.
"""
from __future__ import annotations

import heapq
import itertools
import math
import random
from collections import defaultdict
from fractions import Fraction

from .errors import (Degenerate, DummyDeletion, DuplicateSites,
                     InconsistentConflictIndex, OutsideFrame,
                     SeedNotConflicting)
from .gauge import (ALWAYS, LOWER, NEVER, UPPER, BoundingFrame, ConvexGauge,
                    Uncertain)

S_EPS = 1e-10
INF = float("inf")


class InvalidDiagram(Exception):
    """Internal consistency failure while assembling cell cycles."""


class Vertex:
    __slots__ = ("key", "x", "y", "lam", "dx", "dy")

    def __init__(self, key, x, y, lam, dx=0.0, dy=0.0):
        self.key = key
        self.x, self.y, self.lam = x, y, lam
        self.dx, self.dy = dx, dy

    @property
    def kind(self):
        return self.key[0]

    @property
    def sites(self):
        return key_sites(self.key)

    @property
    def position(self):
        return (self.x, self.y)

    def __repr__(self):
        return f"Vertex({self.key}, ({self.x:.6g}, {self.y:.6g}), lam={self.lam})"


def key_sites(key):
    if key[0] == "V":
        return key[1:4]
    return key[1:3]


def vkey(a, b, c):
    if a > b:
        a, b = b, a
    if b > c:
        b, c = c, b
        if a > b:
            a, b = b, a
    return ("V", a, b, c)


# ---------------------------------------------------------------------------
# vertex geometry from keys
# ---------------------------------------------------------------------------

def _find_bend(bis, who, k):
    for pt in bis.points:
        if pt[4] == who and pt[5] == k:
            return pt
    return None


def make_vertex(g: ConvexGauge, points, key) -> Vertex:
    kind = key[0]
    if kind == "V":
        a, b, c = key[1], key[2], key[3]
        res = g.constraint(points[a], points[b], points[c])
        if res[0] not in (LOWER, UPPER):
            raise InvalidDiagram(f"no homothet through the sites of {key}")
        return Vertex(key, float(res[2]), float(res[3]), float(res[4]))
    lo, hi = key[1], key[2]
    if kind == "B":
        who = 0 if key[3] == lo else 1
        try:
            pt = _find_bend(g.bis(points[lo], points[hi]), who, key[4])
        except Uncertain:
            pt = None
        if pt is None:
            pt = _find_bend(g.xbis(points[lo], points[hi]), who, key[4])
        if pt is None:
            raise InvalidDiagram(f"bend {key} does not exist")
        return Vertex(key, float(pt[1]), float(pt[2]), float(pt[3]))
    e = key[3]
    try:
        bis = g.bis(points[lo], points[hi])
    except Uncertain:
        bis = g.xbis(points[lo], points[hi])
    pt = bis.points[0] if e == bis.e_lo else bis.points[-1]
    dx, dy = g.vertices_Q[e]
    return Vertex(key, float(pt[1]), float(pt[2]), None, dx, dy)


_EXACT = {}


def exact_vertex(g: ConvexGauge, points, key):
    """Exact (x, y, lam) of a finite vertex, memoised on the defining points."""
    memo = (g, key, tuple(points[s] for s in key_sites(key)))
    got = _EXACT.get(memo)
    if got is None:
        if len(_EXACT) > 200000:
            _EXACT.clear()
        got = _EXACT[memo] = _exact_vertex(g, points, key)
    return got


def _exact_vertex(g, points, key):
    kind = key[0]
    if kind == "V":
        a, b, c = key[1], key[2], key[3]
        res = g.constraint(points[a], points[b], points[c], exact=True)
        if res[0] not in (LOWER, UPPER):
            raise InvalidDiagram(f"no homothet through the sites of {key}")
        return res[2], res[3], res[4]
    if kind == "B":
        lo, hi = key[1], key[2]
        pt = _find_bend(g.xbis(points[lo], points[hi]), 0 if key[3] == lo else 1, key[4])
        return pt[1], pt[2], pt[3]
    raise ValueError("vertices at infinity have no finite position")


# ---------------------------------------------------------------------------
# the diagram
# ---------------------------------------------------------------------------

class VorDiagram:
    """Sites, vertices and counter-clockwise cell cycles."""

    def __init__(self, gauge, frame, points, verts, cycles, dummies):
        self.gauge = gauge
        self.frame = frame
        self.points = points
        self.verts = verts
        self.cycles = cycles
        self.dummies = tuple(dummies)
        self.aliases = {}
        self.triangles = None

    def copy(self) -> "VorDiagram":
        d = VorDiagram(self.gauge, self.frame, dict(self.points), dict(self.verts),
                       dict(self.cycles), self.dummies)
        d.aliases = dict(self.aliases)
        return d

    # -- queries ------------------------------------------------------------
    @property
    def sites(self):
        return self.points

    def real_sites(self):
        dm = set(self.dummies)
        return [s for s in self.points if s not in dm]

    def is_dummy(self, s):
        return s < len(self.dummies) and s in self.dummies

    def vertex(self, key) -> Vertex:
        return self.verts[key]

    def vertex_neighbors(self, key):
        """Vertices joined to ``key`` by a diagram edge piece."""
        out = []
        for s in key_sites(key):
            cyc = self.cycles[s]
            i = cyc.index(key)
            n = len(cyc)
            bounded = cyc[0][0] != "I"
            if i > 0 or bounded:
                out.append(cyc[i - 1])
            if i < n - 1 or bounded:
                out.append(cyc[(i + 1) % n])
        return out

    def site_neighbors(self, s):
        out = set()
        for key in self.cycles[s]:
            out.update(key_sites(key))
        out.discard(s)
        return out

    def degree(self, s):
        return len(self.site_neighbors(s))

    def exact(self, key):
        return exact_vertex(self.gauge, self.points, key)

    def conflicts(self, key, q) -> bool:
        """Closed conflict test of point q with vertex ``key``."""
        v = self.verts[key]
        if v.lam is None:
            return False
        g = self.gauge
        val = g.core.gval(v.x - q[0], v.y - q[1]) - v.lam
        tol = S_EPS * (1.0 + v.lam + abs(v.x) + abs(v.y) + abs(q[0]) + abs(q[1]))
        if val > tol:
            return False
        if val < -tol:
            return True
        x, y, lam = self.exact(key)
        return g.xcore.gval(x - Fraction(q[0]), y - Fraction(q[1])) <= lam

    def strict_conflict(self, key, q) -> bool:
        """Open containment: q strictly inside the clearance of ``key``."""
        v = self.verts[key]
        if v.lam is None:
            return False
        g = self.gauge
        val = g.core.gval(v.x - q[0], v.y - q[1]) - v.lam
        tol = S_EPS * (1.0 + v.lam + abs(v.x) + abs(v.y) + abs(q[0]) + abs(q[1]))
        if val > tol:
            return False
        if val < -tol:
            return True
        x, y, lam = self.exact(key)
        return g.xcore.gval(x - Fraction(q[0]), y - Fraction(q[1])) < lam

    def key_set(self):
        return set(self.verts)

    def __len__(self):
        return len(self.points)

    def __repr__(self):
        return (f"VorDiagram({len(self.points)} sites, {len(self.verts)} vertices, "
                f"{len(self.dummies)} dummies)")

    # -- mutation -------------------------------------------------------------
    def insert_site(self, label, q, seed=None):
        return insert_site(self, q, seed, label=label, in_place=True)

    def delete_site(self, label):
        return delete_site(self, label, in_place=True)


# ---------------------------------------------------------------------------
# ordering along a bisector
# ---------------------------------------------------------------------------

def _s_float(d, key, ux, uy):
    v = d.verts[key]
    if v.lam is None:
        c = ux * v.dy - uy * v.dx
        return INF if c > 0 else -INF
    return ux * v.y - uy * v.x


def _s_exact(d, key, pa, pb):
    v = d.verts[key]
    ux = Fraction(pb[0]) - Fraction(pa[0])
    uy = Fraction(pb[1]) - Fraction(pa[1])
    if v.lam is None:
        return INF if ux * v.dy - uy * v.dx > 0 else -INF
    x, y, _ = d.exact(key)
    return ux * y - uy * x


def _sort_along(d, keys, a, b):
    """Sort keys on the a|b edge by increasing cross(p_b - p_a, position)."""
    pa, pb = d.points[a], d.points[b]
    ux, uy = pb[0] - pa[0], pb[1] - pa[1]
    if len(keys) == 2:
        s0 = _s_float(d, keys[0], ux, uy)
        s1 = _s_float(d, keys[1], ux, uy)
        if abs(s1 - s0) > S_EPS * (1.0 + abs(s0) + abs(s1)) * (1.0 + abs(ux) + abs(uy)):
            return keys if s0 < s1 else [keys[1], keys[0]]
    dec = sorted((_s_float(d, k, ux, uy), k) for k in keys)
    for (s0, _), (s1, _) in zip(dec, dec[1:]):
        if s1 - s0 <= S_EPS * (1.0 + abs(s0) + abs(s1)) * (1.0 + abs(ux) + abs(uy)):
            break
    else:
        return [k for _, k in dec]
    return [k for _, k in sorted((_s_exact(d, k, pa, pb), k) for k in keys)]


def assemble_cycle(d: VorDiagram, a, keys):
    """Counter-clockwise cycle of site ``a`` from the set of its vertex keys."""
    groups = defaultdict(list)
    for key in keys:
        if key[0] == "V":
            for s in key[1:4]:
                if s != a:
                    groups[s].append(key)
        else:
            groups[key[2] if key[1] == a else key[1]].append(key)
    starts = {}
    for b, ks in groups.items():
        if len(ks) < 2:
            raise InvalidDiagram(f"edge {a}|{b} has a single vertex {ks}")
        ks = _sort_along(d, ks, a, b)
        head = ks[0]
        if head[0] == "B" or ks[-1][0] == "B":
            raise InvalidDiagram(f"edge {a}|{b} ends at a bend")
        if head in starts:
            raise InvalidDiagram(f"two edges of {a} start at {head}")
        starts[head] = ks
    first = None
    for head in starts:
        if head[0] == "I":
            if first is not None:
                raise InvalidDiagram(f"cell {a} has two gaps at infinity")
            first = head
    if first is None:
        # bounded cells start at their least vertex so the layout is reproducible
        first = min(starts)
    cycle = []
    head = first
    used = 0
    while True:
        ks = starts.get(head)
        if ks is None:
            raise InvalidDiagram(f"cell {a} chain breaks at {head}")
        cycle.extend(ks[:-1])
        used += 1
        head = ks[-1]
        if head[0] == "I":
            cycle.append(head)
            break
        if head == first:
            break
        if used > len(starts):
            raise InvalidDiagram(f"cell {a} chain does not close")
    if used != len(starts):
        raise InvalidDiagram(f"cell {a} has {len(starts) - used} stray edges")
    return cycle


# ---------------------------------------------------------------------------
# enumeration of the vertices of a site set (oracle and local diagrams)
# ---------------------------------------------------------------------------

def _cmp(g, pa, pb, s1, c1, s2, c2):
    """Sign of s1 - s2 for roots on bisector(pa, pb), with exact fallback."""
    if abs(s1 - s2) > S_EPS * (1.0 + abs(s1) + abs(s2)) * (1.0 + abs(pb[0] - pa[0]) + abs(pb[1] - pa[1])):
        return -1 if s1 < s2 else 1
    e1 = g.constraint(pa, pb, c1, exact=True)[1]
    e2 = g.constraint(pa, pb, c2, exact=True)[1]
    return (e1 > e2) - (e1 < e2)


def _lt(g, pa, pb, s1, c1, s2, c2):
    return _cmp(g, pa, pb, s1, c1, s2, c2) < 0


def pair_edge(g, points, a, b, others):
    """Extent of the a|b edge among the sites ``others`` (a < b).

    Returns None when the edge is empty, else ``(lo, lo_site, hi, hi_site)``
    with None sites for unbounded ends.  ``s`` runs along bisector(a, b).
    """
    pa, pb = points[a], points[b]
    lo = hi = None
    lo_c = hi_c = None
    for c in others:
        pc = points[c]
        kind, s, x, y, lam = g.constraint(pa, pb, pc)
        if kind == NEVER:
            continue
        if kind == ALWAYS:
            return None
        if kind == LOWER:
            o = 1 if lo_c is None else _cmp(g, pa, pb, s, pc, lo, points[lo_c])
            if o > 0 or (o == 0 and c < lo_c):
                lo, lo_c = s, c
        else:
            o = -1 if hi_c is None else _cmp(g, pa, pb, s, pc, hi, points[hi_c])
            if o < 0 or (o == 0 and c < hi_c):
                hi, hi_c = s, c
        if lo_c is not None and hi_c is not None:
            if not _lt(g, pa, pb, lo, points[lo_c], hi, points[hi_c]):
                return None
    return (lo, lo_c, hi, hi_c)


def _bends_between(g, points, a, b, lo, lo_c, hi, hi_c):
    pa, pb = points[a], points[b]
    try:
        bis = g.bis(pa, pb)
    except Uncertain:
        bis = g.xbis(pa, pb)
    out = []
    for pt in bis.points:
        if pt[4] < 0:
            continue
        if lo_c is not None and not _bend_after(g, pa, pb, pt, lo, points[lo_c]):
            continue
        if hi_c is not None and not _bend_before(g, pa, pb, pt, hi, points[hi_c]):
            continue
        out.append(("B", a, b, a if pt[4] == 0 else b, pt[5]))
    return out


def _bend_after(g, pa, pb, pt, s_root, pc):
    s = pt[0]
    if abs(s - s_root) > S_EPS * (1.0 + abs(s) + abs(s_root)) * (1.0 + abs(pb[0] - pa[0]) + abs(pb[1] - pa[1])):
        return s > s_root
    xs = _find_bend(g.xbis(pa, pb), pt[4], pt[5])[0]
    return xs > g.constraint(pa, pb, pc, exact=True)[1]


def _bend_before(g, pa, pb, pt, s_root, pc):
    s = pt[0]
    if abs(s - s_root) > S_EPS * (1.0 + abs(s) + abs(s_root)) * (1.0 + abs(pb[0] - pa[0]) + abs(pb[1] - pa[1])):
        return s < s_root
    xs = _find_bend(g.xbis(pa, pb), pt[4], pt[5])[0]
    return xs < g.constraint(pa, pb, pc, exact=True)[1]


def _edge_keys(g, points, a, b, ext):
    lo, lo_c, hi, hi_c = ext
    keys = []
    try:
        bis = g.bis(points[a], points[b])
    except Uncertain:
        bis = g.xbis(points[a], points[b])
    keys.append(vkey(a, b, lo_c) if lo_c is not None else ("I", a, b, bis.e_lo))
    keys.append(vkey(a, b, hi_c) if hi_c is not None else ("I", a, b, bis.e_hi))
    keys.extend(_bends_between(g, points, a, b, lo, lo_c, hi, hi_c))
    return keys


def _near_lists(g, points, labels, count):
    near = {}
    for a in labels:
        pa = points[a]
        near[a] = [b for _, b in heapq.nsmallest(
            count + 1, ((g.mdist(pa, points[b]), b) for b in labels))
            if b != a][:count]
    return near


def enumerate_keys(g, points, labels, finite_only=False):
    """All vertex keys of the diagram of ``labels`` by per-pair edge extents."""
    labels = sorted(labels)
    near = _near_lists(g, points, labels, 10)
    keys = set()
    for i, a in enumerate(labels):
        for b in labels[i + 1:]:
            first = [c for c in dict.fromkeys(near[a] + near[b]) if c != a and c != b]
            seen = set(first)
            rest = [c for c in labels if c not in seen and c != a and c != b]
            ext = pair_edge(g, points, a, b, first + rest)
            if ext is None:
                continue
            for key in _edge_keys(g, points, a, b, ext):
                if finite_only and key[0] == "I":
                    continue
                keys.add(key)
    return keys


def _diagram_from_keys(g, frame, points, keys, dummies):
    verts = {k: make_vertex(g, points, k) for k in keys}
    d = VorDiagram(g, frame, points, verts, {}, dummies)
    per_site = defaultdict(list)
    for k in keys:
        for s in key_sites(k):
            per_site[s].append(k)
    for s in points:
        if not per_site.get(s):
            raise InvalidDiagram(f"site {s} has no vertices")
        d.cycles[s] = assemble_cycle(d, s, per_site[s])
    return d


def _frame_points(frame):
    return {i: tuple(p) for i, p in enumerate(frame.dummies)}


def label_sites(frame, sites, start=None):
    """Map labels to points: dummies first, then the given sites."""
    points = _frame_points(frame)
    base = len(points) if start is None else start
    for i, p in enumerate(sites):
        points[base + i] = (float(p[0]), float(p[1]))
    return points


# Two sites whose difference is parallel to a side of the gauge have a
# two-dimensional bisector.  A difference parallel to a vertex of the gauge,
# or to a chord between two vertices, makes two bends of the bisector meet,
# which lets symmetric inputs put a vertex exactly on a bend.  A site on any
# of these lines through an earlier site is moved by a tiny offset seeded by
# its coordinates; labels are handled in increasing order so the result does
# not depend on insertion order, and relabelling the sites without
# reordering them moves them the same way.
NUDGE = 2.0 ** -36
_GOLDEN = math.pi * (3.0 - math.sqrt(5.0))
_DIRS = {}


def _special_dirs(g):
    dirs = _DIRS.get(g)
    if dirs is None:
        core = g.xcore
        vs = list(zip(core.vx, core.vy))
        cand = vs + [(a[0] - b[0], a[1] - b[1]) for i, a in enumerate(vs) for b in vs[i + 1:]]
        seen = {}
        for ex, ey in cand:
            slope = None if ey == 0 else ex / ey
            seen.setdefault(slope, (ex, ey))
        dirs = list(seen.values())
        _DIRS[g] = dirs
    return dirs


class LineIndex:
    """Exact lines through sites, one family per special direction of the gauge."""

    def __init__(self, g, points=()):
        self.dirs = _special_dirs(g)
        self.count = defaultdict(int)
        for p in points:
            self.add(p)

    def keys(self, p):
        fx, fy = Fraction(p[0]), Fraction(p[1])
        return [(k, ex * fy - ey * fx) for k, (ex, ey) in enumerate(self.dirs)]

    def add(self, p):
        for key in self.keys(p):
            self.count[key] += 1

    def remove(self, p):
        for key in self.keys(p):
            self.count[key] -= 1
            if not self.count[key]:
                del self.count[key]

    def aligned(self, p) -> bool:
        return any(key in self.count for key in self.keys(p))


def nudge_site(lines: LineIndex, frame, p, label, taken=(), step=NUDGE):
    """``p`` when no indexed site shares a special line with it, else a point nearby that doesn't."""
    if not lines.aligned(p):
        return p
    scale = max(1.0, abs(p[0]), abs(p[1]))
    seed = hash((p[0], p[1])) % 1000003
    for j in range(1, 64):
        th = seed * _GOLDEN + j
        r = step * j * scale
        for sgn in (1.0, -1.0):
            c = (p[0] + sgn * r * math.cos(th), p[1] + sgn * r * math.sin(th))
            if c not in taken and frame.contains(c) and not lines.aligned(c):
                return c
    raise Degenerate(f"could not move site {label} at {p} off the special lines of its neighbours")


def place_sites(g, frame, fixed, new):
    """Positions for the labelled points ``new`` next to the sites ``fixed``.

    Exact duplicates keep their position so callers can collapse them.
    """
    lines = LineIndex(g, fixed.values())
    taken = {p: s for s, p in fixed.items()}
    out = {}
    for lab in sorted(new):
        p = (float(new[lab][0]), float(new[lab][1]))
        if p not in taken:
            p = nudge_site(lines, frame, p, lab, taken)
            lines.add(p)
            taken[p] = lab
        out[lab] = p
    return out


def _line_index(d):
    lines = getattr(d, "_lines", None)
    if lines is None:
        lines = LineIndex(d.gauge, d.points.values())
        d._lines = lines
    return lines


def _check_inside(frame, p):
    if not frame.contains(p):
        raise OutsideFrame(f"site {p} lies outside the frame box")


def brute_force_voronoi(g, sites, frame, labels=None) -> VorDiagram:
    """Diagram of ``sites`` plus the frame dummies by per-pair enumeration.

    ``sites`` is a point list (labelled after the dummies) or, with
    ``labels=True``, a label-to-point mapping that already excludes dummies.
    """
    points = _frame_points(frame)
    if labels:
        given = {k: (float(p[0]), float(p[1])) for k, p in sites.items()}
    else:
        given = {s: p for s, p in label_sites(frame, sites).items() if s not in points}
    _reject_duplicates({**points, **given})
    points.update(place_sites(g, frame, points, given))
    keys = enumerate_keys(g, points, list(points))
    return _diagram_from_keys(g, frame, points, keys, range(len(frame.dummies)))


def _reject_duplicates(points):
    seen = {}
    for s, p in points.items():
        if p in seen:
            raise DuplicateSites(f"sites {seen[p]} and {s} coincide at {p}")
        seen[p] = s


_BASES = {}


def dummy_base(g: ConvexGauge, frame: BoundingFrame) -> VorDiagram:
    """The diagram of the dummy sites alone (cached per gauge and frame)."""
    tag = (g, frame.dummies)
    d = _BASES.get(tag)
    if d is None:
        points = _frame_points(frame)
        keys = enumerate_keys(g, points, list(points))
        d = _diagram_from_keys(g, frame, points, keys, range(len(frame.dummies)))
        _BASES[tag] = d
    return d.copy()


# ---------------------------------------------------------------------------
# conflicts, insertion, location
# ---------------------------------------------------------------------------

def conflict_region(d: VorDiagram, q, seed):
    """All vertices whose clearance contains q, by search from ``seed``."""
    q = (float(q[0]), float(q[1]))
    if not d.conflicts(seed, q):
        raise SeedNotConflicting(f"seed {seed} does not conflict with {q}")
    found = {seed}
    stack = [seed]
    rejected = set()
    while stack:
        key = stack.pop()
        for w in d.vertex_neighbors(key):
            if w in found or w in rejected:
                continue
            if d.conflicts(w, q):
                found.add(w)
                stack.append(w)
            else:
                rejected.add(w)
    return found


def nearest_site(d: VorDiagram, q, start=None):
    """Site whose cell contains q, by a greedy walk over cell adjacency."""
    g = d.gauge
    cur = start if start is not None and start in d.points else next(iter(d.points))
    best = g.dist(d.points[cur], q)
    while True:
        step = None
        for s in d.site_neighbors(cur):
            ds = g.dist(d.points[s], q)
            if ds < best:
                best, step = ds, s
        if step is None:
            return cur
        cur = step


def locate_seed(d: VorDiagram, q, start=None):
    """A vertex conflicting with q, found from the cell containing q."""
    site = nearest_site(d, q, start)
    for key in d.cycles[site]:
        if d.conflicts(key, q):
            return key
    for key in d.verts:
        if d.conflicts(key, q):
            return key
    raise SeedNotConflicting(f"no vertex conflicts with {q}")


def _new_vertex_keys(d, q_label, region):
    """Keys of vertices created on the edges leaving the conflict region."""
    created = {}
    for key in sorted(region):
        for w in d.vertex_neighbors(key):
            if w in region:
                continue
            ks = set(key_sites(key)).intersection(key_sites(w))
            if len(ks) != 2:
                raise InvalidDiagram(f"adjacent vertices {key} and {w} share {ks}")
            a, b = sorted(ks)
            nk = vkey(q_label, a, b)
            if nk not in created:
                created[nk] = (a, b)
    return created


def insert_site(d: VorDiagram, q, seed=None, label=None, in_place=False, stats=None):
    """Diagram with site q added; ``seed`` is a vertex conflicting with q."""
    q = (float(q[0]), float(q[1]))
    _check_inside(d.frame, q)
    if not in_place:
        d = d.copy()
    if label is None:
        label = max(d.points) + 1
    idx = _point_index(d)
    if q in idx:
        d.aliases[label] = idx[q]
        return d
    lines = _line_index(d)
    moved = nudge_site(lines, d.frame, q, label, idx)
    if moved != q:
        q, seed = moved, None
    if seed is None:
        seed = locate_seed(d, q)
    region = conflict_region(d, q, seed)
    created = _new_vertex_keys(d, label, region)
    d.points[label] = q
    idx[q] = label
    lines.add(q)
    g, points = d.gauge, d.points
    per_site = defaultdict(list)
    for nk, (a, b) in created.items():
        d.verts[nk] = make_vertex(g, points, nk)
        per_site[a].append(nk)
        per_site[b].append(nk)
    new_keys = list(created)
    for a, ends in per_site.items():
        if len(ends) != 2:
            raise InvalidDiagram(f"site {a} gets {len(ends)} new vertices")
        lo, hi = (label, a) if label < a else (a, label)
        bends = _bends_between_keys(d, lo, hi, ends)
        for bk in bends:
            d.verts[bk] = make_vertex(g, points, bk)
        ends.extend(bends)
        new_keys.extend(bends)
    for a, ks in per_site.items():
        keep = [k for k in d.cycles[a] if k not in region]
        d.cycles[a] = assemble_cycle(d, a, keep + ks)
    d.cycles[label] = assemble_cycle(d, label, new_keys)
    for key in region:
        del d.verts[key]
    if stats is not None:
        stats["created"] = stats.get("created", 0) + len(new_keys)
        stats["destroyed"] = stats.get("destroyed", 0) + len(region)
        if stats.get("track"):
            stats.setdefault("created_keys", []).extend(new_keys)
            stats.setdefault("destroyed_keys", []).extend(region)
    d.triangles = None
    return d


def _bends_between_keys(d, lo, hi, ends):
    """Bends of bisector(lo, hi) strictly between the two given vertices."""
    g, points = d.gauge, d.points
    pa, pb = points[lo], points[hi]
    s_ends = _sort_along(d, ends, lo, hi)
    k0, k1 = s_ends
    try:
        bis = g.bis(pa, pb)
    except Uncertain:
        bis = g.xbis(pa, pb)
    ux, uy = pb[0] - pa[0], pb[1] - pa[1]
    s0 = _s_float(d, k0, ux, uy)
    s1 = _s_float(d, k1, ux, uy)
    out = []
    for pt in bis.points:
        if pt[4] < 0:
            continue
        bk = ("B", lo, hi, lo if pt[4] == 0 else hi, pt[5])
        if _bend_inside(d, bk, pt[0], k0, s0, k1, s1, pa, pb):
            out.append(bk)
    return out


def _bend_inside(d, bk, s, k0, s0, k1, s1, pa, pb):
    span = (1.0 + abs(pb[0] - pa[0]) + abs(pb[1] - pa[1]))
    near0 = abs(s - s0) <= S_EPS * (1.0 + abs(s) + abs(s0)) * span
    near1 = abs(s - s1) <= S_EPS * (1.0 + abs(s) + abs(s1)) * span
    if not near0 and not near1:
        return s0 < s < s1
    g = d.gauge
    lo = bk[1]
    xs = _find_bend(g.xbis(pa, pb), 0 if bk[3] == lo else 1, bk[4])[0]
    e0 = _s_exact(d, k0, pa, pb)
    e1 = _s_exact(d, k1, pa, pb)
    return e0 < xs < e1


def build_voronoi(g, sites, frame, rng=None, labels=None, stats=None) -> VorDiagram:
    """Diagram of ``sites`` plus dummies by randomized incremental insertion.

    ``labels`` optionally gives the label of each site (default: consecutive
    after the dummies).  Exact duplicates are collapsed onto the first copy.
    """
    rng = rng if rng is not None else random.Random(0)
    d = dummy_base(g, frame)
    base = len(frame.dummies)
    items = list(zip(labels if labels is not None else range(base, base + len(sites)), sites))
    for _, p in items:
        _check_inside(frame, p)
    placed = place_sites(g, frame, d.points, dict(items))
    items = sorted(placed.items())
    rng.shuffle(items)
    last = None
    for lab, p in items:
        if p in _point_index(d):
            d.aliases[lab] = _point_index(d)[p]
            continue
        seed = locate_seed(d, p, last)
        insert_site(d, p, seed, label=lab, in_place=True, stats=stats)
        last = lab
    return d


def _point_index(d):
    idx = getattr(d, "_pindex", None)
    if idx is None:
        idx = {p: s for s, p in d.points.items()}
        d._pindex = idx
    return idx


def diagram_of(g, frame, points, rng=None, stats=None) -> VorDiagram:
    """RIC diagram over a label-to-point mapping of real sites."""
    labs = sorted(points)
    return build_voronoi(g, [points[s] for s in labs], frame, rng=rng, labels=labs, stats=stats)


# ---------------------------------------------------------------------------
# triangulation and point-in-region tests
# ---------------------------------------------------------------------------

FAR = 1e6


def triangulate_cells(d: VorDiagram) -> VorDiagram:
    """Attach the fan triangulation: triangles (site, u, v) per cycle step."""
    tris = []
    for s, cyc in d.cycles.items():
        n = len(cyc)
        for i in range(n):
            tris.append((s, cyc[i], cyc[(i + 1) % n]))
    d.triangles = tris
    return d


def vertex_point(d, key, far=FAR):
    """A finite stand-in for a vertex: far along the ray for infinite ones."""
    v = d.verts[key]
    if v.lam is None:
        # every stand-in lands on the line e.z = far of its unit direction e,
        # so all of them sit on the boundary of one convex region
        h = math.hypot(v.dx, v.dy)
        ex, ey = v.dx / h, v.dy / h
        t = far - (ex * v.x + ey * v.y)
        return (v.x + t * ex, v.y + t * ey)
    return (v.x, v.y)


def _orient(ax, ay, bx, by, cx, cy):
    return (bx - ax) * (cy - ay) - (by - ay) * (cx - ax)


def _pt(d, item):
    """(float point, exact thunk, direction flag) for a site point or key."""
    if isinstance(item, tuple) and item and isinstance(item[0], str):
        v = d.verts[item]
        if v.lam is None:
            return (v.dx, v.dy), (lambda: (Fraction(v.dx), Fraction(v.dy))), True
        return (v.x, v.y), (lambda: d.exact(item)[:2]), False
    p = item
    return p, (lambda: (Fraction(p[0]), Fraction(p[1]))), False


def orientation(d, a, b, c):
    """Sign of the turn a -> b -> c; items are points or vertex keys.

    A vertex at infinity stands for its direction: the turn is then taken
    against the ray from the previous point.
    """
    (ax, ay), xa, ia = _pt(d, a)
    (bx, by), xb, ib = _pt(d, b)
    (cx, cy), xc, ic = _pt(d, c)
    val, mag = _orient_mixed(ax, ay, ia, bx, by, ib, cx, cy, ic)
    if abs(val) > 1e-9 * mag:
        return 1 if val > 0 else -1
    A, B, C = xa(), xb(), xc()
    val, _ = _orient_mixed(A[0], A[1], ia, B[0], B[1], ib, C[0], C[1], ic)
    return (val > 0) - (val < 0)


def _orient_mixed(ax, ay, ia, bx, by, ib, cx, cy, ic):
    # Points at infinity contribute only their direction.
    if ia or ib or ic:
        if ia + ib + ic > 1:
            if ib and ic:
                v = bx * cy - by * cx
            elif ia and ic:
                v = cx * ay - cy * ax
            else:
                v = ax * by - ay * bx
            return v, 1.0 + abs(ax) + abs(ay) + abs(bx) + abs(by) + abs(cx) + abs(cy)
        if ic:
            v = (bx - ax) * cy - (by - ay) * cx
        elif ib:
            v = bx * (cy - ay) - by * (cx - ax)
        else:
            v = (cx - bx) * ay - (cy - by) * ax
        return v, (1.0 + abs(ax) + abs(ay) + abs(bx) + abs(by) + abs(cx) + abs(cy)) ** 2
    v = (bx - ax) * (cy - ay) - (by - ay) * (cx - ax)
    return v, (1.0 + abs(ax) + abs(ay) + abs(bx) + abs(by) + abs(cx) + abs(cy)) ** 2


def in_triangle(d, apex, ku, kv, q, closed=True):
    """Whether q (point or key) lies in the fan triangle (apex, u, v)."""
    o1 = orientation(d, apex, ku, q)
    o3 = orientation(d, kv, apex, q)
    if _is_inf(ku) and _is_inf(kv):
        a, b = d.verts[ku], d.verts[kv]
        if a.dx * b.dy - a.dy * b.dx < 0:
            # open sector wider than a half-turn
            if closed:
                return o1 >= 0 or o3 >= 0
            return o1 > 0 or o3 > 0
        o2 = 1
    else:
        o2 = orientation(d, ku, kv, q)
    if closed:
        return o1 >= 0 and o2 >= 0 and o3 >= 0
    return o1 > 0 and o2 > 0 and o3 > 0


def _is_inf(key):
    return isinstance(key, tuple) and key and key[0] == "I"


def _same_spot(d, u, v):
    a, b = d.verts[u], d.verts[v]
    if a.lam is None or b.lam is None:
        return False
    if (a.x, a.y) != (b.x, b.y) and abs(a.x - b.x) + abs(a.y - b.y) > 1e-9 * (1.0 + abs(a.x) + abs(a.y)):
        return False
    return d.exact(u)[:2] == d.exact(v)[:2]


def in_cell(d, s, q, closed=False):
    """Whether q lies in the cell of site s, via its fan triangles."""
    cyc = d.cycles[s]
    n = len(cyc)
    apex = d.points[s]
    for i in range(n):
        u, v = cyc[i], cyc[(i + 1) % n]
        if in_triangle(d, apex, u, v, q, closed=True):
            if closed:
                return True
            if _same_spot(d, u, v):
                # zero-length outer edge (two bends at one point): the
                # neighbouring triangles decide
                continue
            # reject points on the outer edge or on the cell boundary
            if orientation(d, u, v, q) == 0 and not (_is_inf(u) and _is_inf(v)):
                return False
            return True
    return False


# ---------------------------------------------------------------------------
# deletion
# ---------------------------------------------------------------------------

def delete_site(d: VorDiagram, p, in_place=False):
    """Diagram without site p, rebuilt inside p's former cell."""
    if p in d.dummies and p < len(d.dummies):
        raise DummyDeletion(f"site {p} is a frame dummy")
    if not in_place:
        d = d.copy()
    if p in d.aliases:
        del d.aliases[p]
        return d
    hole = d.cycles[p]
    hole_set = set(hole)
    nbrs = d.site_neighbors(p)
    g, points = d.gauge, d.points
    fresh = {}
    labels = sorted(nbrs)
    for i, a in enumerate(labels):
        for b in labels[i + 1:]:
            others = [c for c in labels if c != a and c != b]
            ext = pair_edge(g, points, a, b, others)
            if ext is None:
                continue
            for key in _edge_keys(g, points, a, b, ext):
                if key[0] == "I" or key in fresh:
                    continue
                if key in d.verts and key not in hole_set:
                    continue
                v = make_vertex(g, points, key)
                d.verts[key] = v
                if in_cell(d, p, key, closed=True):
                    fresh[key] = v
                else:
                    del d.verts[key]
    per_site = defaultdict(list)
    for key in fresh:
        for s in key_sites(key):
            per_site[s].append(key)
    for a in nbrs:
        keep_keys = [k for k in d.cycles[a] if k not in hole_set]
        d.cycles[a] = assemble_cycle(d, a, keep_keys + per_site.get(a, []))
    for key in hole:
        del d.verts[key]
    del d.cycles[p]
    del d.points[p]
    d.triangles = None
    d._pindex = None
    d._lines = None
    return d


# ---------------------------------------------------------------------------
# merge of an input set into a diagram using a conflict index
# ---------------------------------------------------------------------------

def merge_local(dR: VorDiagram, conflict_index, I, stats=None, verify=True) -> VorDiagram:
    """Diagram over R plus the input points ``I`` (label -> point).

    ``conflict_index`` maps each input label to the keys of vertices it
    conflicts with; keys absent from ``dR`` are ignored, the rest form U_R.
    Every fan triangle of ``dR`` touching U_R is recomputed from the local
    diagram of its apex and the conflicting input points of its two corners.
    """
    d = dR.copy()
    if not I:
        return d
    Z = defaultdict(list)
    for lab, keys in conflict_index.items():
        for key in keys:
            if key in dR.verts:
                Z[key].append(lab)
    for lab, p in I.items():
        p = (float(p[0]), float(p[1]))
        _check_inside(d.frame, p)
        if p in _point_index(dR):
            raise DuplicateSites(f"input point {p} coincides with site {_point_index(dR)[p]}")
        d.points[lab] = p
    if verify:
        for key, labs in Z.items():
            for lab in labs:
                if not d.conflicts(key, d.points[lab]):
                    raise InconsistentConflictIndex(f"{lab} does not conflict with {key}")
    U = set(Z)
    fresh = {}
    touched = set()
    for key in U:
        for q in key_sites(key):
            cyc = dR.cycles[q]
            i = cyc.index(key)
            n = len(cyc)
            for j in (i - 1, i):
                if j < 0 and cyc[0][0] == "I":
                    continue
                if j == n - 1 and cyc[0][0] == "I":
                    continue
                u, v = cyc[j % n], cyc[(j + 1) % n]
                tri = (q, u, v)
                if tri in touched:
                    continue
                touched.add(tri)
                _merge_triangle(d, dR, q, u, v, Z, fresh)
    _drop_covered_bends(d, dR, U, fresh)
    per_site = defaultdict(list)
    for key in fresh:
        for s in key_sites(key):
            per_site[s].append(key)
    for key, v in fresh.items():
        d.verts[key] = v
    for key in U:
        del d.verts[key]
    for s, ks in per_site.items():
        if s in dR.cycles:
            old = [k for k in dR.cycles[s] if k not in U]
            d.cycles[s] = assemble_cycle(d, s, old + ks)
        else:
            d.cycles[s] = assemble_cycle(d, s, ks)
    for s in dR.cycles:
        if s not in per_site and any(k in U for k in dR.cycles[s]):
            d.cycles[s] = assemble_cycle(d, s, [k for k in dR.cycles[s] if k not in U])
    missing = [lab for lab in I if lab not in d.cycles]
    if missing:
        raise InconsistentConflictIndex(f"input points {missing[:5]} received no cell")
    if stats is not None:
        stats["recomputed_triangles"] = touched
        stats["U_R"] = U
    d.triangles = None
    d._pindex = None
    d._lines = None
    return d


def _merge_triangle(d, dR, q, u, v, Z, fresh):
    g, points = d.gauge, d.points
    zu = Z.get(u, ())
    zv = Z.get(v, ())
    local = sorted(set(zu).union(zv))
    if len(local) >= 1:
        labels = [q] + local
        for i, a in enumerate(labels):
            for b in labels[i + 1:]:
                others = [c for c in labels if c != a and c != b]
                lo_ab, hi_ab = (a, b) if a < b else (b, a)
                ext = pair_edge(g, points, lo_ab, hi_ab, others)
                if ext is None:
                    continue
                for key in _edge_keys(g, points, lo_ab, hi_ab, ext):
                    if key[0] == "I" or key in fresh:
                        continue
                    vert = make_vertex(g, points, key)
                    d.verts[key] = vert
                    inside = in_triangle(d, points[q], u, v, key, closed=True)
                    del d.verts[key]
                    if inside:
                        fresh[key] = vert
    # crossings on the cell edge between u and v
    shared = set(key_sites(u)).intersection(key_sites(v))
    shared.discard(q)
    if len(shared) != 1:
        raise InvalidDiagram(f"fan triangle {q}, {u}, {v} is not on a single edge")
    r = shared.pop()
    killers = sorted(set(zu).union(zv))
    if not killers:
        return
    lo, hi = (q, r) if q < r else (r, q)
    pa, pb = points[lo], points[hi]
    ends = _sort_along(dR, [u, v], lo, hi)
    # start from the piece's own extent and tighten by each killer
    best_lo = best_hi = None
    for p in killers:
        kind, s, x, y, lam = g.constraint(pa, pb, points[p])
        if kind == ALWAYS:
            return
        if kind == LOWER:
            if best_lo is None or _lt(g, pa, pb, best_lo[0], points[best_lo[1]], s, points[p]):
                best_lo = (s, p)
        elif kind == UPPER:
            if best_hi is None or _lt(g, pa, pb, s, points[p], best_hi[0], points[best_hi[1]]):
                best_hi = (s, p)
    if best_lo is not None and best_hi is not None:
        if not _lt(g, pa, pb, best_lo[0], points[best_lo[1]], best_hi[0], points[best_hi[1]]):
            return
    for best, end, want_after in ((best_lo, ends[0], True), (best_hi, ends[1], False)):
        if best is None:
            continue
        key = vkey(lo, hi, best[1])
        if key in fresh:
            continue
        vert = make_vertex(g, points, key)
        d.verts[key] = vert
        inside = _on_piece(d, dR, key, ends[0], ends[1], lo, hi)
        del d.verts[key]
        if inside:
            fresh[key] = vert


def _drop_covered_bends(d, dR, U, fresh):
    """Remove fresh bends that sit exactly on a vertex of their own edge.

    A fan triangle whose local sites miss the third site of a vertex keeps
    the whole bisector, so a bend at that vertex can slip in.
    """
    g, points = d.gauge, d.points
    by_pair = defaultdict(list)
    for key in fresh:
        if key[0] == "V":
            for a, b in itertools.combinations(sorted(key[1:4]), 2):
                by_pair[a, b].append(key)
    for bk in [k for k in fresh if k[0] == "B"]:
        lo, hi = bk[1], bk[2]
        cands = list(by_pair.get((lo, hi), ()))
        if lo in dR.cycles:
            cands += [k for k in dR.cycles[lo] if k[0] == "V" and hi in k[1:4] and k not in U]
        b = fresh[bk]
        for vk in cands:
            v = fresh.get(vk) or dR.verts[vk]
            if abs(v.x - b.x) + abs(v.y - b.y) > 1e-9 * (1.0 + abs(b.x) + abs(b.y)):
                continue
            if exact_vertex(g, points, vk)[:2] == exact_vertex(g, points, bk)[:2]:
                del fresh[bk]
                break


def _on_piece(d, dR, key, k0, k1, lo, hi):
    pa, pb = d.points[lo], d.points[hi]
    ux, uy = pb[0] - pa[0], pb[1] - pa[1]
    s = _s_float(d, key, ux, uy)
    s0 = _s_float(dR, k0, ux, uy)
    s1 = _s_float(dR, k1, ux, uy)
    span = 1.0 + abs(ux) + abs(uy)
    if (abs(s - s0) > S_EPS * (1.0 + abs(s) + abs(s0)) * span
            and abs(s - s1) > S_EPS * (1.0 + abs(s) + abs(s1)) * span):
        return s0 < s < s1
    e = _s_exact(d, key, pa, pb)
    e0, e1 = _s_exact(dR, k0, pa, pb), _s_exact(dR, k1, pa, pb)
    # a new vertex may land on an old bend, which the conflict set removes
    return ((e0 < e or (e == e0 and k0[0] == "B"))
            and (e < e1 or (e == e1 and k1[0] == "B")))


# ---------------------------------------------------------------------------
# split of a labelled diagram
# ---------------------------------------------------------------------------

def _nearest_same_label(d, s, labels):
    """Nearest site with the same label under the metric d, searching outward."""
    g = d.gauge
    ps = d.points[s]
    want = labels[s]
    seen = {s}
    heap = []
    for t in d.site_neighbors(s):
        seen.add(t)
        heapq.heappush(heap, (g.mdist(ps, d.points[t]), t))
    while heap:
        dist, t = heapq.heappop(heap)
        if labels.get(t) == want:
            return t
        for w in d.site_neighbors(t):
            if w not in seen:
                seen.add(w)
                heapq.heappush(heap, (g.mdist(ps, d.points[w]), w))
    return None


def _reinsert(target, s, p, hint):
    seed = None
    if hint is not None and hint in target.cycles:
        for key in target.cycles[hint]:
            if target.conflicts(key, p):
                seed = key
                break
    if seed is None:
        seed = locate_seed(target, p, hint if hint in target.points else None)
    insert_site(target, p, seed, label=s, in_place=True)


def split_labeled(d: VorDiagram, labels, rng=None, stats=None):
    """Split a diagram over R and I into (diagram over I, diagram over R).

    ``labels`` maps every non-dummy site to "I" or "R".  Rounds delete a random
    independent set of low-degree sites, recurse, and put the deleted sites
    back into their own side, seeded from their nearest same-label site.
    """
    rng = rng if rng is not None else random.Random(0)
    real = d.real_sites()
    n = max(2, len(real))
    limit = 4 * math.ceil(math.log2(n))
    st = stats if stats is not None else {}
    st.setdefault("depth", 0)
    st.setdefault("fallback", False)
    out = _split(d.copy(), labels, rng, 0, limit, st)
    return out


def _only(d, keep):
    """Fresh diagram over the non-dummy sites in ``keep`` (a set)."""
    pts = {s: d.points[s] for s in d.real_sites() if s in keep}
    return diagram_of(d.gauge, d.frame, pts)


def _split(d, labels, rng, depth, limit, st):
    st["depth"] = max(st["depth"], depth)
    real = d.real_sites()
    ins = [s for s in real if labels[s] == "I"]
    if len(ins) == len(real):
        return d, dummy_base(d.gauge, d.frame)
    if not ins:
        return dummy_base(d.gauge, d.frame), d
    if depth > limit:
        st["fallback"] = True
        return _only(d, set(ins)), _only(d, set(real) - set(ins))
    rng.shuffle(real)
    degs = {s: d.degree(s) for s in real}
    cap = 2.0 * sum(degs.values()) / len(real)
    chosen = []
    blocked = set()
    for s in real:
        if s in blocked or degs[s] > cap:
            continue
        chosen.append(s)
        blocked.add(s)
        blocked.update(d.site_neighbors(s))
    hint = {s: _nearest_same_label(d, s, labels) for s in chosen}
    chosen_set = set(chosen)
    chosen = [s for s in chosen if hint[s] not in chosen_set]
    pts = {s: d.points[s] for s in chosen}
    for s in chosen:
        delete_site(d, s, in_place=True)
    dI, dR = _split(d, labels, rng, depth + 1, limit, st)
    for s in reversed(chosen):
        target = dI if labels[s] == "I" else dR
        _reinsert(target, s, pts[s], hint[s])
    return dI, dR


# ---------------------------------------------------------------------------
# comparison and validation
# ---------------------------------------------------------------------------

def canonical_form(d: VorDiagram):
    """Coordinate-based, label-free form of the keys and cell cycles."""
    pts = d.points

    def ck(key):
        if key[0] == "V":
            return ("V",) + tuple(sorted(pts[s] for s in key[1:4]))
        if key[0] == "B":
            return ("B", pts[key[1]], pts[key[2]], pts[key[3]], key[4])
        return ("I", pts[key[1]], pts[key[2]], key[3])

    keys = frozenset(ck(k) for k in d.verts)
    cells = {}
    for s, cyc in d.cycles.items():
        seq = [ck(k) for k in cyc]
        if seq and seq[0][0] != "I":
            i = seq.index(min(seq))
            seq = seq[i:] + seq[:i]
        cells[pts[s]] = tuple(seq)
    return keys, cells


def combinatorial_equal(d1: VorDiagram, d2: VorDiagram) -> bool:
    return canonical_form(d1) == canonical_form(d2)


def diagram_difference(d1, d2):
    """Human-readable summary of how two diagrams differ."""
    k1, c1 = canonical_form(d1)
    k2, c2 = canonical_form(d2)
    out = []
    if k1 != k2:
        out.append(f"only in first: {sorted(k1 - k2)[:6]}")
        out.append(f"only in second: {sorted(k2 - k1)[:6]}")
    bad = [p for p in set(c1) | set(c2) if c1.get(p) != c2.get(p)]
    if bad:
        out.append(f"{len(bad)} cells differ, e.g. at {bad[:3]}")
    return "; ".join(out) or "equal"


def empty_clearance_violations(d: VorDiagram, strict=True):
    """Vertices whose clearance contains a site strictly inside (exhaustive)."""
    bad = []
    for key, v in d.verts.items():
        if v.lam is None:
            continue
        own = set(key_sites(key))
        for s, p in d.points.items():
            if s in own:
                continue
            if d.strict_conflict(key, p):
                bad.append((key, s))
                break
    return bad


def defining_sites_on_boundary(d: VorDiagram, tol=1e-9):
    """Largest |d_Q(site, v) - lam| over vertices and their defining sites."""
    g = d.gauge
    worst = 0.0
    for key, v in d.verts.items():
        if v.lam is None:
            continue
        for s in key_sites(key):
            worst = max(worst, abs(g.dist(d.points[s], (v.x, v.y)) - v.lam))
    return worst


def vertex_triples(d: VorDiagram):
    """Sorted site-index triples of the Voronoi vertices (outcome hashing)."""
    return sorted(tuple(k[1:4]) for k in d.verts if k[0] == "V")


def to_json(d: VorDiagram):
    return {
        "sites": {str(s): list(p) for s, p in d.points.items()},
        "dummies": list(d.dummies),
        "vertices": [{"key": list(k), "position": [v.x, v.y], "kind": k[0],
                      "sites": list(key_sites(k)), "scale": v.lam,
                      "direction": [v.dx, v.dy] if v.lam is None else None}
                     for k, v in d.verts.items()],
        "cells": {str(s): [list(k) for k in cyc] for s, cyc in d.cycles.items()},
    }


def to_svg(d: VorDiagram, path, box=None):
    """Debug drawing of the cells restricted to a box."""
    if box is None:
        c, h = d.frame.center, d.frame.half * 1.6
        box = (c[0] - h, c[1] - h, c[0] + h, c[1] + h)
    x0, y0, x1, y1 = box
    w = 800.0
    sc = w / (x1 - x0)

    def tr(p):
        return ((p[0] - x0) * sc, (y1 - p[1]) * sc)

    lines = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{w:.0f}" height="{(y1 - y0) * sc:.0f}">']
    span = 4 * (x1 - x0)
    for s, cyc in d.cycles.items():
        pts = [tr(vertex_point(d, k, span)) for k in cyc]
        path_d = " ".join(f"{x:.2f},{y:.2f}" for x, y in pts)
        lines.append(f'<polygon points="{path_d}" fill="none" stroke="black" stroke-width="0.6"/>')
    for s, p in d.points.items():
        x, y = tr(p)
        color = "gray" if s in d.dummies else "red"
        lines.append(f'<circle cx="{x:.2f}" cy="{y:.2f}" r="2" fill="{color}"/>')
    lines.append("</svg>")
    with open(path, "w") as fh:
        fh.write("\n".join(lines))


__all__ = ["Vertex", "VorDiagram", "build_voronoi", "brute_force_voronoi", "triangulate_cells",
           "conflict_region", "insert_site", "delete_site", "merge_local", "split_labeled",
           "combinatorial_equal", "canonical_form", "dummy_base", "diagram_of", "key_sites",
           "assemble_cycle", "empty_clearance_violations", "locate_seed", "nearest_site",
           "in_triangle", "in_cell", "vertex_triples", "to_json", "to_svg", "InvalidDiagram",
           "LineIndex", "nudge_site", "place_sites"]
