"""Splitting a diagram into small regions of whole cells, and the per-region search aids."""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

from .locate import TrapezoidalMap, triangle_segments
from .voronoi import VorDiagram, diagram_of, key_sites, triangulate_cells


class HomothetBVH:
    """Bounding-box hierarchy over clearance homothets of diagram vertices.

    ``hits(q)`` returns the keys whose closed clearance contains q, using the
    diagram's exact conflict test at the leaves.
    """

    LEAF = 4

    def __init__(self, d: VorDiagram, keys):
        self.d = d
        qs = d.gauge.vertices_Q
        # clearance of w is w + lam * Q*, i.e. w - lam * Q
        lo_x = -max(p[0] for p in qs)
        hi_x = -min(p[0] for p in qs)
        lo_y = -max(p[1] for p in qs)
        hi_y = -min(p[1] for p in qs)
        items = []
        for k in keys:
            v = d.verts[k]
            if v.lam is None:
                continue
            items.append(((v.x + v.lam * lo_x, v.y + v.lam * lo_y,
                           v.x + v.lam * hi_x, v.y + v.lam * hi_y), k))
        self.size = len(items)
        self.nodes = []
        if items:
            self._build(items)

    def _build(self, items):
        # nodes: (box, left, right, keys or None)
        def box_of(its):
            return (min(b[0] for b, _ in its), min(b[1] for b, _ in its),
                    max(b[2] for b, _ in its), max(b[3] for b, _ in its))

        def rec(its):
            idx = len(self.nodes)
            self.nodes.append(None)
            bx = box_of(its)
            if len(its) <= self.LEAF:
                self.nodes[idx] = (bx, -1, -1, [k for _, k in its])
                return idx
            axis = 0 if bx[2] - bx[0] >= bx[3] - bx[1] else 1
            its = sorted(its, key=lambda it: (it[0][axis] + it[0][axis + 2], it[1]))
            half = len(its) // 2
            left = rec(its[:half])
            right = rec(its[half:])
            self.nodes[idx] = (bx, left, right, None)
            return idx

        rec(items)

    def hits(self, q, counter=None):
        out = []
        if not self.nodes:
            return out
        x, y = q
        stack = [0]
        tests = 0
        while stack:
            bx, left, right, keys = self.nodes[stack.pop()]
            tests += 1
            if x < bx[0] or x > bx[2] or y < bx[1] or y > bx[3]:
                continue
            if keys is None:
                stack.append(right)
                stack.append(left)
                continue
            for k in keys:
                tests += 1
                if self.d.conflicts(k, q):
                    out.append(k)
        if counter is not None:
            counter[0] += tests
        return out

    def first_hit(self, q, counter=None):
        got = self.hits(q, counter)
        return got[0] if got else None


@dataclass
class Region:
    """A group of whole cells of the trained diagram."""
    index: int
    sites: list
    vertices: set
    boundary: list
    triangles: list
    bvh: HomothetBVH = field(default=None, repr=False)
    locator: TrapezoidalMap = field(default=None, repr=False)

    def locate(self, q):
        """(triangle id or None, depth) through the region's own map."""
        return self.locator.query((float(q[0]), float(q[1])))


@dataclass
class Division:
    regions: list
    region_of_site: dict
    B: list
    vorB: VorDiagram
    in_VS: dict
    region_of_vertex: dict
    m: int

    def boundary_keys(self):
        out = set()
        for r in self.regions:
            out.update(r.boundary)
        return out

    def size_report(self):
        vs = [len(r.vertices) for r in self.regions]
        bs = [len(r.boundary) for r in self.regions]
        return {"regions": len(self.regions), "max_vertices": max(vs, default=0),
                "max_boundary": max(bs, default=0), "B": len(self.B)}


def _finite_keys(d, sites):
    out = set()
    for s in sites:
        for k in d.cycles[s]:
            if d.verts[k].lam is not None:
                out.add(k)
    return out


def _components(adj, group):
    members = set(group)
    seen = set()
    out = []
    for s in sorted(group):
        if s in seen:
            continue
        comp = []
        dq = deque([s])
        seen.add(s)
        while dq:
            u = dq.popleft()
            comp.append(u)
            for w in adj[u]:
                if w in members and w not in seen:
                    seen.add(w)
                    dq.append(w)
        out.append(sorted(comp))
    return out


def _bfs_levels(adj, group, start):
    members = set(group)
    level = {start: 0}
    dq = deque([start])
    order = []
    while dq:
        u = dq.popleft()
        order.append(u)
        for w in sorted(adj[u]):
            if w in members and w not in level:
                level[w] = level[u] + 1
                dq.append(w)
    return level, order


def split_groups(d: VorDiagram, limit: int):
    """Groups of real sites, each connected with at most ``limit`` cell vertices.

    A group over the limit is cut between two breadth-first levels from a
    far-out site, at the level that best halves it; each side is split
    again per connected component.  Single sites are never split further.
    """
    real = sorted(d.real_sites())
    adj = {s: [t for t in d.site_neighbors(s) if not d.is_dummy(t)] for s in real}
    done = []
    work = _components(adj, real)
    while work:
        grp = work.pop()
        if len(grp) == 1 or len(_finite_keys(d, grp)) <= limit:
            done.append(grp)
            continue
        lev, order = _bfs_levels(adj, grp, grp[0])
        far = order[-1]
        lev, order = _bfs_levels(adj, grp, far)
        top = max(lev.values())
        best = None
        for j in range(1, top + 1):
            inner = sum(1 for s in grp if lev[s] < j)
            score = abs(2 * inner - len(grp))
            if best is None or score < best[0]:
                best = (score, j)
        if best is None:
            # a single level: halve it in breadth-first order
            half = len(order) // 2
            parts = [order[:half], order[half:]]
        else:
            j = best[1]
            parts = [[s for s in grp if lev[s] < j], [s for s in grp if lev[s] >= j]]
        for part in parts:
            work.extend(_components(adj, part))
    done.sort()
    return done


def build_m2_division(vorS: VorDiagram, m: int, tri_of_site=None) -> Division:
    """Regions of at most m*m vertices each, the set B and its diagram.

    The frame dummies form one extra outer region.  A boundary vertex is a
    cell vertex with defining sites in two regions; B is every site whose
    cell carries one (plus the dummies).  Vertices of the diagram over B are
    labelled by whether they are also vertices of ``vorS``, and those that
    are not get the region they lie in.
    """
    if vorS.triangles is None:
        triangulate_cells(vorS)
    groups = split_groups(vorS, max(1, m * m))
    groups.append(sorted(vorS.dummies))
    region_of_site = {}
    for i, grp in enumerate(groups):
        for s in grp:
            region_of_site[s] = i
    if tri_of_site is None:
        tri_of_site = {}
        for t, (s, _, _) in enumerate(vorS.triangles):
            tri_of_site.setdefault(s, []).append(t)
    regions = []
    Bset = set(vorS.dummies)
    for i, grp in enumerate(groups):
        keys = set()
        for s in grp:
            keys.update(vorS.cycles[s])
        boundary = sorted(k for k in keys
                          if len({region_of_site[s] for s in key_sites(k)}) > 1)
        for k in boundary:
            Bset.update(key_sites(k))
        tris = sorted(t for s in grp for t in tri_of_site.get(s, ()))
        regions.append(Region(i, grp, _finite_keys(vorS, grp), boundary, tris))
    for r in regions:
        r.bvh = HomothetBVH(vorS, r.boundary)
        segs = triangle_segments(vorS, r.triangles)
        r.locator = TrapezoidalMap(segs)
    B = sorted(Bset)
    pts = {s: vorS.points[s] for s in B if not vorS.is_dummy(s)}
    vorB = triangulate_cells(diagram_of(vorS.gauge, vorS.frame, pts))
    in_VS = {k: k in vorS.verts for k in vorB.verts}
    region_of_vertex = {}
    outside = []
    for k, present in in_VS.items():
        if present or vorB.verts[k].lam is None:
            continue
        outside.append(k)
    if outside:
        region_of_vertex = _regions_of_points(vorS, regions, region_of_site,
                                              {k: (vorB.verts[k].x, vorB.verts[k].y)
                                               for k in outside})
    return Division(regions, region_of_site, B, vorB, in_VS, region_of_vertex, m)


def _regions_of_points(vorS, regions, region_of_site, pts):
    """Region holding each point, from the nearest site under the gauge."""
    from .voronoi import nearest_site
    out = {}
    last = None
    for k in sorted(pts):
        s = nearest_site(vorS, pts[k], last)
        last = s
        out[k] = region_of_site[s]
    return out


def rebuild_region_aids(vorS: VorDiagram, regions):
    for r in regions:
        r.bvh = HomothetBVH(vorS, r.boundary)
        r.locator = TrapezoidalMap(triangle_segments(vorS, r.triangles))


__all__ = ["HomothetBVH", "Region", "Division", "split_groups", "build_m2_division",
           "rebuild_region_aids"]
