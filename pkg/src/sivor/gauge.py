"""Convex-distance primitives for a polygonal gauge Q.

Conventions: ``d_Q(x, y) = min{lam >= 0 : y in lam*Q + x}``.  A clearance
homothet is ``scale*Q* + center`` with ``Q* = -Q``; a point ``q`` lies in it
exactly when ``d_Q(q, center) <= scale``.  The metric ``d`` is the gauge of
``Q^ = Q* + Q``, which is centrally symmetric.
"""
from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass
from fractions import Fraction

from .errors import (Degenerate, GPViolation, NonConvex, OriginOutside,
                     ParallelSides, Unbounded)
from .kernels import (ALWAYS, LOWER, NEVER, UPPER, Degeneracy, FastGaugeCore,
                      PyGaugeCore, Uncertain)

CONFLICT_EPS = 1e-10


def _cross(ax, ay, bx, by):
    return ax * by - ay * bx


def _fr(p):
    return (Fraction(p[0]), Fraction(p[1]))


def convex_hull(points):
    """Strict convex hull (CCW, no collinear vertices) by monotone chain."""
    pts = sorted(set(points))
    if len(pts) <= 2:
        return pts

    def half(seq):
        out = []
        for p in seq:
            while len(out) >= 2 and _cross(out[-1][0] - out[-2][0], out[-1][1] - out[-2][1],
                                           p[0] - out[-2][0], p[1] - out[-2][1]) <= 0:
                out.pop()
            out.append(p)
        return out

    lower = half(pts)
    upper = half(reversed(pts))
    return lower[:-1] + upper[:-1]


def edge_normals(vertices):
    """Normals ``a_j`` with ``a_j . y = 1`` on edge j (from vertex j to j+1)."""
    out = []
    k = len(vertices)
    for j in range(k):
        x0, y0 = vertices[j]
        x1, y1 = vertices[(j + 1) % k]
        dx, dy = x1 - x0, y1 - y0
        den = dy * x0 - dx * y0
        out.append((dy / den, -dx / den))
    return out


@dataclass(frozen=True)
class Homothet:
    center: tuple
    scale: float


class ConvexGauge:
    """A validated polygon Q together with Q*, Q^ and evaluation cores."""

    def __init__(self, vertices):
        exact = [_fr(v) for v in vertices]
        self.k = len(exact)
        self.vertices_Q = tuple((float(x), float(y)) for x, y in exact)
        self.vertices_Qstar = tuple((-x, -y) for x, y in self.vertices_Q)
        hat = convex_hull([(a[0] + b[0], a[1] + b[1])
                           for a in exact for b in [(-x, -y) for x, y in exact]])
        self._exact_Q = tuple(exact)
        self._exact_Qhat = tuple(hat)
        self.vertices_Qhat = tuple((float(x), float(y)) for x, y in hat)
        xn = edge_normals(exact)
        self._exact_normals = tuple(xn)
        self.normals_Q = tuple((float(a), float(b)) for a, b in xn)
        self.normals_Qstar = tuple((-a, -b) for a, b in self.normals_Q)
        hn = edge_normals(hat)
        self.normals_Qhat = tuple((float(a), float(b)) for a, b in hn)
        self.core = FastGaugeCore(self.vertices_Q, self.normals_Q)
        self.xcore = PyGaugeCore(self._exact_Q, self._exact_normals, exact=True)
        self.hat_core = FastGaugeCore(self.vertices_Qhat, self.normals_Qhat)
        self.hat_xcore = PyGaugeCore(hat, hn, exact=True)
        self._bis = {}
        self._xbis = {}

    def __repr__(self):
        return f"ConvexGauge({list(self.vertices_Q)})"

    def __eq__(self, other):
        return isinstance(other, ConvexGauge) and self._exact_Q == other._exact_Q

    def __hash__(self):
        return hash(self._exact_Q)

    def __reduce__(self):
        return (ConvexGauge, (self.vertices_Q,))

    # -- evaluation -----------------------------------------------------
    def dist(self, x, y):
        """Float d_Q(x, y)."""
        return self.core.gval(y[0] - x[0], y[1] - x[1])

    def xdist(self, x, y):
        """Exact d_Q(x, y) for Fraction or float inputs."""
        return self.xcore.gval(Fraction(y[0]) - Fraction(x[0]), Fraction(y[1]) - Fraction(x[1]))

    def mdist(self, x, y):
        return self.hat_core.gval(y[0] - x[0], y[1] - x[1])

    def xmdist(self, x, y):
        return self.hat_xcore.gval(Fraction(y[0]) - Fraction(x[0]), Fraction(y[1]) - Fraction(x[1]))

    # -- bisectors ------------------------------------------------------
    def bis(self, p, q):
        """Float bisector of (p, q); raises Uncertain near degeneracies."""
        key = (p, q)
        b = self._bis.get(key)
        if b is None:
            try:
                b = self.core.bisector(p[0], p[1], q[0], q[1])
            except Degeneracy:
                raise Uncertain
            if len(self._bis) > 400000:
                self._bis.clear()
            self._bis[key] = b
        return b

    def xbis(self, p, q):
        """Exact bisector of (p, q) over Fractions."""
        key = (p, q)
        b = self._xbis.get(key)
        if b is None:
            fp, fq = _fr(p), _fr(q)
            try:
                b = self.xcore.bisector(fp[0], fp[1], fq[0], fq[1])
            except Degeneracy:
                raise GPViolation(f"sites {p} and {q} span a side direction of Q")
            if len(self._xbis) > 50000:
                self._xbis.clear()
            self._xbis[key] = b
        return b

    def constraint(self, p, q, c, exact=False):
        """Where c lies strictly inside the clearance along bisector(p, q).

        Returns ``(kind, s, x, y, lam)`` as in the kernels, with Fractions when
        the float path was not conclusive or ``exact`` is set.
        """
        if not exact:
            try:
                return self.core.constraint(self.bis(p, q), c[0], c[1])
            except Uncertain:
                pass
        b = self.xbis(p, q)
        fc = _fr(c)
        try:
            return self.xcore.constraint(b, fc[0], fc[1])
        except Degeneracy:
            raise Degenerate(f"sites {p}, {q}, {c} are not in general position")

    def circumscribe(self, a, b, c, exact=False):
        """(x, y, lam) of the homothet through a, b, c by walking bisector(a, b)."""
        kind, s, x, y, lam = self.constraint(a, b, c, exact)
        if kind in (LOWER, UPPER):
            return (x, y, lam)
        return None


def make_gauge(vertices) -> ConvexGauge:
    """Validate a polygon and derive Q*, Q^ and the evaluation cores."""
    pts = [_fr(v) for v in vertices]
    if len(pts) < 3:
        raise NonConvex("a gauge polygon needs at least three vertices")
    area2 = sum(_cross(*pts[i], *pts[(i + 1) % len(pts)]) for i in range(len(pts)))
    if area2 < 0:
        pts.reverse()
    if area2 == 0:
        raise NonConvex("polygon has zero area")
    k = len(pts)
    edges = [(pts[(i + 1) % k][0] - pts[i][0], pts[(i + 1) % k][1] - pts[i][1]) for i in range(k)]
    for i, j in itertools.combinations(range(k), 2):
        ei, ej = edges[i], edges[j]
        if _cross(*ei, *ej) == 0 and ei[0] * ej[0] + ei[1] * ej[1] > 0:
            raise ParallelSides(f"sides {i} and {j} share a direction")
    for i in range(k):
        if _cross(*edges[i], *edges[(i + 1) % k]) <= 0:
            raise NonConvex(f"turn at vertex {(i + 1) % k} is not a strict left turn")
    winding = 0.0
    for i in range(k):
        a1 = math.atan2(edges[i][1], edges[i][0])
        a2 = math.atan2(edges[(i + 1) % k][1], edges[(i + 1) % k][0])
        winding += (a2 - a1) % (2 * math.pi)
    if abs(winding - 2 * math.pi) > 1e-6:
        raise NonConvex("polygon winds more than once")
    for i in range(k):
        if _cross(*edges[i], -pts[i][0], -pts[i][1]) <= 0:
            raise OriginOutside("the origin is not strictly inside Q")
    return ConvexGauge(pts)


def load_gauge(path) -> ConvexGauge:
    with open(path) as fh:
        return make_gauge([tuple(v) for v in json.load(fh)])


SQUARE = ((1, 1), (-1, 1), (-1, -1), (1, -1))
TRIANGLE = ((-1, -1), (2, -1), (-1, 2))
PENTAGON = ((1.2, 0.1), (0.4, 1.1), (-0.9, 0.7), (-1.0, -0.6), (0.3, -1.2))

NAMED_GAUGES = {"square": SQUARE, "triangle": TRIANGLE, "pentagon": PENTAGON}


def named_gauge(name) -> ConvexGauge:
    return make_gauge(NAMED_GAUGES[name])


def gauge_distance(g: ConvexGauge, x, y) -> float:
    return g.dist(x, y)


def metric_distance(g: ConvexGauge, x, y) -> float:
    return g.mdist(x, y)


def circumscribe_three(g: ConvexGauge, a, b, c):
    """Homothet of Q* with a, b and c on its boundary, or None.

    Solves the 3x3 system for every assignment of the points to sides of the
    homothet, so it also handles points sitting on homothet corners.
    """
    pa, pb, pc = _fr(a), _fr(b), _fr(c)
    if pa == pb or pb == pc or pa == pc:
        raise Degenerate("circumscribing needs three distinct points")
    normals = g._exact_normals
    found = None
    for i, j, k in itertools.product(range(g.k), repeat=3):
        rows = [(normals[i], pa), (normals[j], pb), (normals[k], pc)]
        # a_i . (x - p) = lam  ->  a_i . x - lam = a_i . p
        m = [[n[0], n[1], Fraction(-1)] for n, _ in rows]
        rhs = [n[0] * p[0] + n[1] * p[1] for n, p in rows]
        sol = _solve3(m, rhs)
        if sol is None:
            continue
        x, y, lam = sol
        if lam <= 0:
            continue
        if all(g.xcore.gval(x - p[0], y - p[1]) == lam for p in (pa, pb, pc)):
            if found is not None and found != (x, y, lam):
                raise Degenerate("points lie on more than one homothet")
            found = (x, y, lam)
    if found is None:
        return None
    return Homothet((float(found[0]), float(found[1])), float(found[2]))


def _solve3(m, rhs):
    a = [row[:] + [r] for row, r in zip(m, rhs)]
    for col in range(3):
        piv = next((r for r in range(col, 3) if a[r][col] != 0), None)
        if piv is None:
            return None
        a[col], a[piv] = a[piv], a[col]
        for r in range(3):
            if r != col and a[r][col] != 0:
                f = a[r][col] / a[col][col]
                a[r] = [u - f * v for u, v in zip(a[r], a[col])]
    return tuple(a[i][3] / a[i][i] for i in range(3))


def largest_empty_homothet(g: ConvexGauge, x, sites) -> Homothet:
    sites = list(sites)
    if not sites:
        raise Unbounded("no sites bound the homothet")
    return Homothet(tuple(x), min(g.dist(s, x) for s in sites))


def conflicts(g: ConvexGauge, q, h: Homothet) -> bool:
    """Closed containment of q in the homothet h."""
    v = g.dist(q, h.center) - h.scale
    if abs(v) > CONFLICT_EPS * (1.0 + abs(h.scale) + max(map(abs, q)) + max(map(abs, h.center))):
        return v < 0
    return g.xdist(q, h.center) <= Fraction(h.scale)


@dataclass(frozen=True)
class BisectorCurve:
    """Polyline of a bisector: bends sorted along the curve and the two ray directions."""
    p: tuple
    q: tuple
    breakpoints: tuple
    direction_lo: tuple
    direction_hi: tuple

    def sample(self, count=64, span=None):
        """Points spread along the polyline and both rays."""
        pts = [bp[:2] for bp in self.breakpoints]
        if span is None:
            span = 1.0 + max(abs(v) for pt in pts + [self.p, self.q] for v in pt)
        ends = [(pts[0][0] + span * self.direction_lo[0], pts[0][1] + span * self.direction_lo[1])]
        ends += pts
        ends.append((pts[-1][0] + span * self.direction_hi[0], pts[-1][1] + span * self.direction_hi[1]))
        out = []
        per = max(2, count // (len(ends) - 1))
        for a, b in zip(ends, ends[1:]):
            for i in range(per):
                t = i / per
                out.append((a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])))
        out.append(ends[-1])
        return out


def bisector(g: ConvexGauge, p, q) -> BisectorCurve:
    """Breakpoints of the d_Q bisector of p and q, exact then rounded."""
    p, q = tuple(map(float, p)), tuple(map(float, q))
    if p == q:
        raise Degenerate("bisector of a point with itself")
    b = g.xbis(p, q)
    pts = tuple((float(pt[1]), float(pt[2]), float(pt[3])) for pt in b.points)
    lo = g.vertices_Q[b.e_lo]
    hi = g.vertices_Q[b.e_hi]
    return BisectorCurve(p, q, pts, lo, hi)


@dataclass(frozen=True)
class BoundingFrame:
    """Square box plus the dummy sites that keep every inner cell bounded."""
    center: tuple
    half: float
    dummies: tuple
    sweep_scale: float

    def contains(self, p) -> bool:
        return (abs(p[0] - self.center[0]) <= self.half
                and abs(p[1] - self.center[1]) <= self.half)

    def to_json(self):
        return {"center": list(self.center), "half": self.half,
                "dummies": [list(d) for d in self.dummies], "sweep_scale": self.sweep_scale}

    @staticmethod
    def from_json(obj):
        return BoundingFrame(tuple(obj["center"]), obj["half"],
                             tuple(tuple(d) for d in obj["dummies"]), obj["sweep_scale"])


FRAME_MARGIN = 1.25


def dummy_frame(g: ConvexGauge, box=((0.0, 0.0), 1.0), perturb=True) -> BoundingFrame:
    """Dummy sites around a square box so that every inner cell is bounded.

    A cell of a site c is unbounded exactly when, for some vertex v_e of Q,
    the wedge {z : a_(e-1).(z - c) > 0 and a_e.(z - c) > 0} holds no other
    site.  The dummies are the corners of the smallest copy of Q enclosing
    the box enlarged by FRAME_MARGIN, each pushed deeper into its own wedge
    by a distinct amount and slid slightly along the next side.  This puts a
    dummy in every such wedge for every site of the box, keeps dummy pairs
    off the side directions of Q and keeps dummies off the vertex rays
    through the box centre.
    The enclosing copy also clears the box grown by its own metric diameter,
    so an empty homothet touching two box points never reaches a dummy.
    ``sweep_scale`` is the least lam with lam*Q* + x covering the box for
    every x in it.  ``perturb=False`` keeps the bare corners; it exists to
    check that the verification suites catch the resulting degeneracies.
    """
    (cx, cy), half = box
    cx, cy, half = float(cx), float(cy), float(half)
    hb = Fraction(half)
    lam = max(g.xcore.gval(-sx * 2 * hb, -sy * 2 * hb) for sx in (-1, 1) for sy in (-1, 1))
    hf = FRAME_MARGIN * half
    corners = [(cx + sx * hf, cy + sy * hf) for sx in (-1, 1) for sy in (-1, 1)]
    k = g.k
    normals = g.normals_Q
    box_corners = [(cx + sx * half, cy + sy * half) for sx in (-1, 1) for sy in (-1, 1)]
    diam = max(g.mdist(p, q) for p in box_corners for q in box_corners)
    reach = [max(a[0] * c[0] + a[1] * c[1] for c in corners)
             + diam * max(a[0] * h[0] + a[1] * h[1] for h in g.vertices_Qhat) for a in normals]
    apex = []
    for e in range(k):
        a0, a1 = normals[(e - 1) % k], normals[e]
        m0, m1 = reach[(e - 1) % k], reach[e]
        det = a0[0] * a1[1] - a0[1] * a1[0]
        apex.append(((m0 * a1[1] - m1 * a0[1]) / det, (a0[0] * m1 - a1[0] * m0) / det))
    edge_dirs = [(g.vertices_Q[(i + 1) % k][0] - g.vertices_Q[i][0],
                  g.vertices_Q[(i + 1) % k][1] - g.vertices_Q[i][1]) for i in range(k)]
    if not perturb:
        return BoundingFrame((cx, cy), half, tuple(apex), float(lam))
    golden = (math.sqrt(5) - 1) / 2
    for attempt in range(1, 50):
        dummies = []
        for e, (x, y) in enumerate(apex):
            push = half * (0.1 + 0.1 * (((e + 1) * golden * attempt) % 1.0))
            vx, vy = g.vertices_Q[e]
            # a slight slide along the next side keeps dummies off the vertex rays of the box centre
            ex, ey = edge_dirs[e]
            slide = push * 0.02 * (1.0 + (((e + 2) * golden * attempt) % 1.0))
            dummies.append((x + push * vx + slide * ex, y + push * vy + slide * ey))
        if _dummies_in_general_position(dummies, edge_dirs):
            frame = BoundingFrame((cx, cy), half, tuple(dummies), float(lam))
            _check_wedges(g, frame, corners)
            return frame
    raise Degenerate("could not perturb the dummy frame into general position")


def _check_wedges(g, frame, corners):
    k = g.k
    for e in range(k):
        a0, a1 = g.normals_Q[(e - 1) % k], g.normals_Q[e]
        m0 = max(a0[0] * c[0] + a0[1] * c[1] for c in corners)
        m1 = max(a1[0] * c[0] + a1[1] * c[1] for c in corners)
        if not any(a0[0] * d[0] + a0[1] * d[1] > m0 and a1[0] * d[0] + a1[1] * d[1] > m1
                   for d in frame.dummies):
            raise Degenerate(f"no dummy closes the wedge at gauge vertex {e}")


def _dummies_in_general_position(dummies, edge_dirs):
    if len(set(dummies)) != len(dummies):
        return False
    for a, b in itertools.combinations(dummies, 2):
        ux, uy = b[0] - a[0], b[1] - a[1]
        nu = math.hypot(ux, uy)
        for ex, ey in edge_dirs:
            if abs(_cross(ux, uy, ex, ey)) <= 1e-6 * nu * math.hypot(ex, ey):
                return False
    return True


__all__ = ["ConvexGauge", "Homothet", "BisectorCurve", "BoundingFrame", "make_gauge",
           "load_gauge", "named_gauge", "gauge_distance", "metric_distance",
           "circumscribe_three", "largest_empty_homothet", "conflicts", "bisector",
           "dummy_frame", "NEVER", "ALWAYS", "LOWER", "UPPER", "Uncertain"]
