"""Point location in triangle subdivisions with trapezoidal search DAGs.

Points are ordered lexicographically, which acts as a symbolic shear and
removes vertical segments from consideration.  Each segment remembers the
face on either side, so a trapezoid knows its face from its top (or bottom)
segment.  Queries report the face and the number of DAG tests taken.
"""
from __future__ import annotations

import math
import random
from fractions import Fraction

from .errors import Degenerate, OutsideFrame
from .voronoi import FAR, VorDiagram, vertex_point

_X, _Y, _LEAF = 0, 1, 2


def orient(a, b, c):
    """Sign of the turn a -> b -> c, exact on float input."""
    det = (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
    mag = (abs(b[0] - a[0]) + abs(c[0] - a[0])) * (abs(b[1] - a[1]) + abs(c[1] - a[1]))
    if abs(det) > 1e-12 * mag:
        return 1 if det > 0 else -1
    A = [Fraction(v) for v in a]
    B = [Fraction(v) for v in b]
    C = [Fraction(v) for v in c]
    det = (B[0] - A[0]) * (C[1] - A[1]) - (B[1] - A[1]) * (C[0] - A[0])
    return (det > 0) - (det < 0)


class _Seg:
    __slots__ = ("l", "r", "above", "below", "idx")

    def __init__(self, l, r, above, below, idx):
        self.l, self.r, self.above, self.below, self.idx = l, r, above, below, idx


class _Trap:
    __slots__ = ("top", "bottom", "leftp", "rightp", "ul", "ll", "ur", "lr", "node", "dead")

    def __init__(self, top, bottom, leftp, rightp):
        self.top, self.bottom, self.leftp, self.rightp = top, bottom, leftp, rightp
        self.ul = self.ll = self.ur = self.lr = None
        self.node = None
        self.dead = False


class _Node:
    __slots__ = ("kind", "item", "left", "right")

    def __init__(self, kind, item, left=None, right=None):
        self.kind, self.item, self.left, self.right = kind, item, left, right


def _face(t: _Trap):
    if t.top.idx >= 0:
        return t.top.below
    if t.bottom.idx >= 0:
        return t.bottom.above
    return None


class TrapezoidalMap:
    """Search DAG over non-crossing segments inserted in the given order.

    ``segments`` holds (a, b, face_left_of_ab, face_right_of_ab) with faces as
    hashable ids or None for "no face".
    """

    def __init__(self, segments, pad=1.0):
        xs = [p[0] for s in segments for p in s[:2]] or [0.0]
        ys = [p[1] for s in segments for p in s[:2]] or [0.0]
        span = max(max(xs) - min(xs), max(ys) - min(ys), 1.0)
        lo_x, hi_x = min(xs) - pad * span, max(xs) + pad * span
        lo_y, hi_y = min(ys) - pad * span, max(ys) + pad * span
        top = _Seg((lo_x, hi_y), (hi_x, hi_y), None, None, -1)
        bot = _Seg((lo_x, lo_y), (hi_x, lo_y), None, None, -2)
        t0 = _Trap(top, bot, (lo_x, lo_y), (hi_x, hi_y))
        self.root = _Node(_LEAF, t0)
        t0.node = self.root
        self.bounds = (lo_x, lo_y, hi_x, hi_y)
        self.count = 0
        for a, b, left_face, right_face in segments:
            if a == b:
                raise Degenerate(f"zero-length segment at {a}")
            if a < b:
                seg = _Seg(a, b, left_face, right_face, self.count)
            else:
                seg = _Seg(b, a, right_face, left_face, self.count)
            self.count += 1
            self._insert(seg)
        self._compile()

    # -- insertion ------------------------------------------------------------
    def _find_left(self, seg):
        p, q = seg.l, seg.r
        node = self.root
        while node.kind != _LEAF:
            if node.kind == _X:
                node = node.left if p < node.item else node.right
            else:
                s = node.item
                o = orient(s.l, s.r, p)
                if o == 0:
                    if p != s.l:
                        raise Degenerate(f"segment endpoint {p} lies inside another segment")
                    o = orient(s.l, s.r, q)
                    if o == 0:
                        raise Degenerate("overlapping collinear segments")
                node = node.left if o > 0 else node.right
        return node.item

    def _insert(self, seg):
        p, q = seg.l, seg.r
        d0 = self._find_left(seg)
        chain = [d0]
        while q > chain[-1].rightp:
            t = chain[-1]
            o = orient(p, q, t.rightp)
            if o == 0:
                raise Degenerate(f"vertex {t.rightp} lies on a segment")
            nxt = t.lr if o > 0 else t.ur
            if nxt is None:
                raise Degenerate("broken trapezoid adjacency while threading a segment")
            chain.append(nxt)
        first, last = chain[0], chain[-1]
        A = _Trap(first.top, first.bottom, first.leftp, p) if first.leftp != p else None
        B = _Trap(last.top, last.bottom, q, last.rightp) if last.rightp != q else None
        uppers, lowers = [], []
        up = _Trap(first.top, seg, p, None)
        low = _Trap(seg, first.bottom, p, None)
        up_of, low_of = [], []
        for j, t in enumerate(chain):
            up_of.append(up)
            low_of.append(low)
            if j == len(chain) - 1:
                up.rightp = q
                low.rightp = q
                uppers.append(up)
                lowers.append(low)
                break
            r = t.rightp
            if orient(p, q, r) > 0:
                up.rightp = r
                uppers.append(up)
                up = _Trap(chain[j + 1].top, seg, r, None)
            else:
                low.rightp = r
                lowers.append(low)
                low = _Trap(seg, chain[j + 1].bottom, r, None)
        new = uppers + lowers + [x for x in (A, B) if x is not None]
        for x in new:
            x.node = _Node(_LEAF, x)
        # DAG surgery: every old leaf becomes a small decision subtree
        for j, t in enumerate(chain):
            ynode = _Node(_Y, seg, up_of[j].node, low_of[j].node)
            sub = ynode
            if j == len(chain) - 1 and B is not None:
                sub = _Node(_X, q, sub, B.node)
            if j == 0 and A is not None:
                sub = _Node(_X, p, A.node, sub)
            leaf = t.node
            leaf.kind, leaf.item, leaf.left, leaf.right = sub.kind, sub.item, sub.left, sub.right
            t.dead = True
        # neighbour links, recomputed from the shared-wall rule
        old_nb = set()
        for t in chain:
            for nb in (t.ul, t.ll, t.ur, t.lr):
                if nb is not None and not nb.dead:
                    old_nb.add(nb)
        pool = new + list(old_nb)
        by_left_top, by_left_bot, by_right_top, by_right_bot = {}, {}, {}, {}
        for x in pool:
            by_left_top[(x.leftp, id(x.top))] = x
            by_left_bot[(x.leftp, id(x.bottom))] = x
            by_right_top[(x.rightp, id(x.top))] = x
            by_right_bot[(x.rightp, id(x.bottom))] = x
        for x in new:
            x.ur = by_left_top.get((x.rightp, id(x.top)))
            x.lr = by_left_bot.get((x.rightp, id(x.bottom)))
            x.ul = by_right_top.get((x.leftp, id(x.top)))
            x.ll = by_right_bot.get((x.leftp, id(x.bottom)))
        for x in old_nb:
            if x.ur is not None and x.ur.dead:
                x.ur = by_left_top.get((x.rightp, id(x.top)))
            if x.lr is not None and x.lr.dead:
                x.lr = by_left_bot.get((x.rightp, id(x.bottom)))
            if x.ul is not None and x.ul.dead:
                x.ul = by_right_top.get((x.leftp, id(x.top)))
            if x.ll is not None and x.ll.dead:
                x.ll = by_right_bot.get((x.leftp, id(x.bottom)))

    # -- compiled query form ----------------------------------------------------
    def _compile(self):
        """Flatten the DAG into parallel lists (kind, a, b, left, right)."""
        index = {}
        order = []
        stack = [self.root]
        while stack:
            node = stack.pop()
            if id(node) in index:
                continue
            index[id(node)] = len(order)
            order.append(node)
            if node.kind != _LEAF:
                stack.append(node.right)
                stack.append(node.left)
        kind, a, b, left, right = [], [], [], [], []
        for node in order:
            kind.append(node.kind)
            if node.kind == _X:
                a.append(node.item)
                b.append(None)
            elif node.kind == _Y:
                a.append(node.item.l)
                b.append(node.item.r)
            else:
                a.append(_face(node.item))
                b.append(None)
            left.append(index[id(node.left)] if node.kind != _LEAF else -1)
            right.append(index[id(node.right)] if node.kind != _LEAF else -1)
        self.kind, self.a, self.b, self.left, self.right = kind, a, b, left, right
        self.root = None

    def query(self, x):
        """(face, number of tests) for point x."""
        i = 0
        depth = 0
        kind, a, b, left, right = self.kind, self.a, self.b, self.left, self.right
        while kind[i] != _LEAF:
            depth += 1
            if kind[i] == _X:
                i = left[i] if x < a[i] else right[i]
            else:
                i = left[i] if orient(a[i], b[i], x) >= 0 else right[i]
        return a[i], depth

    def max_depth(self):
        memo = {}
        stack = [(0, False)]
        while stack:
            i, done = stack.pop()
            if self.kind[i] == _LEAF:
                memo[i] = 0
                continue
            if done:
                memo[i] = 1 + max(memo[self.left[i]], memo[self.right[i]])
            elif i not in memo:
                stack.append((i, True))
                stack.append((self.right[i], False))
                stack.append((self.left[i], False))
        return memo[0]

    def __len__(self):
        return len(self.kind)

    def to_state(self):
        return {"kind": self.kind, "a": self.a, "b": self.b,
                "left": self.left, "right": self.right}

    @classmethod
    def from_state(cls, st):
        obj = cls.__new__(cls)
        obj.root = None
        obj.kind = list(st["kind"])
        obj.a = [tuple(v) if isinstance(v, list) else v for v in st["a"]]
        obj.b = [tuple(v) if isinstance(v, list) else v for v in st["b"]]
        obj.left = list(st["left"])
        obj.right = list(st["right"])
        return obj


# ---------------------------------------------------------------------------
# triangle subdivisions of a diagram
# ---------------------------------------------------------------------------

def _far_polygon(d: VorDiagram, far):
    """Corners of {z : n.z <= far} over the ray directions plus 16 spread ones."""
    dirs = set()
    for v in d.verts.values():
        if v.lam is None:
            h = math.hypot(v.dx, v.dy)
            dirs.add((v.dx / h, v.dy / h))
    for i in range(16):
        a = 2 * math.pi * (i + 0.5) / 16
        dirs.add((math.cos(a), math.sin(a)))
    normals = sorted(dirs, key=lambda n: math.atan2(n[1], n[0]))
    corners = []
    k = len(normals)
    for i in range(k):
        (a0, a1), (b0, b1) = normals[i], normals[(i + 1) % k]
        det = a0 * b1 - a1 * b0
        x = far * (b1 - a1) / det
        y = far * (a0 - b0) / det
        corners.append((math.atan2(y, x) % (2 * math.pi), (x, y)))
    corners.sort()
    return corners


def _stand_in(d, key, far):
    v = d.verts[key]
    if v.lam is not None:
        return (v.x, v.y)
    return vertex_point(d, key, far)


def triangle_polygon(d: VorDiagram, tri, corners, far=FAR):
    """Counter-clockwise corners standing in for a fan triangle.

    Vertices at infinity move onto the far polygon; a triangle between two
    of them follows that polygon's boundary, which matters when the open
    sector spans more than a half-turn.
    """
    s, u, v = tri
    out = [d.points[s], _stand_in(d, u, far), _stand_in(d, v, far)]
    if d.verts[u].lam is None and d.verts[v].lam is None:
        a1 = math.atan2(out[1][1], out[1][0]) % (2 * math.pi)
        a2 = math.atan2(out[2][1], out[2][0]) % (2 * math.pi)
        span = (a2 - a1) % (2 * math.pi)
        mid = [c for ang, c in corners if 0 < (ang - a1) % (2 * math.pi) < span]
        mid.sort(key=lambda c: (math.atan2(c[1], c[0]) - a1) % (2 * math.pi))
        out = out[:2] + mid + out[2:]
    return out


def triangle_segments(d: VorDiagram, tris, far=FAR):
    """Segments of the listed triangle ids with the face on either side."""
    from .voronoi import orientation
    corners = _far_polygon(d, far)
    edges = {}
    for t in tris:
        s, u, v = d.triangles[t]
        both_far = d.verts[u].lam is None and d.verts[v].lam is None
        if not both_far and orientation(d, d.points[s], u, v) == 0:
            continue  # coincident corners, zero area
        poly = triangle_polygon(d, d.triangles[t], corners, far)
        n = len(poly)
        for i in range(n):
            p, q = poly[i], poly[(i + 1) % n]
            key = (p, q) if p < q else (q, p)
            side = edges.setdefault(key, [None, None])
            # face left of key[0] -> key[1]
            side[0 if (p, q) == key else 1] = t
    return [(k[0], k[1], f[0], f[1]) for k, f in edges.items()]


class UniformLocator:
    """Exact location in the triangulated diagram, segments in random order."""

    def __init__(self, d: VorDiagram, rng=None):
        if d.triangles is None:
            raise ValueError("the diagram must be triangulated first")
        rng = rng or random.Random(0)
        segs = triangle_segments(d, range(len(d.triangles)))
        segs.sort()
        rng.shuffle(segs)
        self.frame = d.frame
        self.map = TrapezoidalMap(segs)

    def locate(self, q):
        """(triangle id, depth); raises OutsideFrame outside the box."""
        if not self.frame.contains(q):
            raise OutsideFrame(f"query {q} lies outside the frame box")
        face, depth = self.map.query((float(q[0]), float(q[1])))
        return face, depth

    def to_state(self):
        return {"frame": self.frame.to_json(), "map": self.map.to_state()}

    @classmethod
    def from_state(cls, st):
        from .gauge import BoundingFrame
        obj = cls.__new__(cls)
        obj.frame = BoundingFrame.from_json(st["frame"])
        obj.map = TrapezoidalMap.from_state(st["map"])
        return obj


class WeightedLocator:
    """Distribution-sensitive location over the positive-frequency triangles.

    Each triangle t gets weight w_t = max(floor, freq_t).  Segments are
    inserted heaviest class first (class = floor(log2(W / w))), shuffled
    within a class, so heavy triangles settle near the DAG root.  Points in
    no listed triangle report ``None``: the exterior carries only the floor
    weight and is left as trapezoids of the map.
    """

    def __init__(self, d: VorDiagram, freq: dict, floor: float, rng=None):
        rng = rng or random.Random(0)
        self.frame = d.frame
        self.floor = floor
        self.weights = {t: max(floor, f) for t, f in freq.items() if f > 0}
        self.total = sum(self.weights.values()) + floor
        segs = triangle_segments(d, sorted(self.weights))
        classes = {}
        for s in segs:
            w = max(self.weights.get(f, floor) for f in s[2:] if f is not None)
            cls = math.floor(math.log2(self.total / w))
            classes.setdefault(cls, []).append(s)
        order = []
        for cls in sorted(classes):
            grp = sorted(classes[cls])
            rng.shuffle(grp)
            order.extend(grp)
        self.map = TrapezoidalMap(order)

    def locate(self, q):
        if not self.frame.contains(q):
            raise OutsideFrame(f"query {q} lies outside the frame box")
        return self.map.query((float(q[0]), float(q[1])))

    def to_state(self):
        return {"frame": self.frame.to_json(), "floor": self.floor,
                "weights": sorted([t, w] for t, w in self.weights.items()),
                "total": self.total, "map": self.map.to_state()}

    @classmethod
    def from_state(cls, st):
        from .gauge import BoundingFrame
        obj = cls.__new__(cls)
        obj.frame = BoundingFrame.from_json(st["frame"])
        obj.floor = st["floor"]
        obj.weights = {int(t): w for t, w in st["weights"]}
        obj.total = st["total"]
        obj.map = TrapezoidalMap.from_state(st["map"])
        return obj


def scan_locate(d: VorDiagram, q):
    """Linear-scan oracle: first fan triangle containing q."""
    from .voronoi import in_triangle
    for i, (s, u, v) in enumerate(d.triangles):
        if in_triangle(d, d.points[s], u, v, q):
            return i
    return None


__all__ = ["TrapezoidalMap", "UniformLocator", "WeightedLocator", "triangle_segments",
           "triangle_polygon", "scan_locate", "orient"]
