"""Pure-Python gauge kernels.

The same code runs on floats (with an error band that raises ``Uncertain``)
and on ``fractions.Fraction`` values (exact, no band).  The compiled module
``_kernels`` mirrors the float path with typed loops.
"""

NEVER, ALWAYS, LOWER, UPPER = 0, 1, 2, 3

EPS = 1e-10


class Uncertain(Exception):
    """A float sign test landed inside the error band; retry exactly."""


class Degeneracy(Exception):
    """An exact computation hit a configuration excluded by general position.

    ``reason`` is one of "parallel" (a site pair along a side direction) or
    "pattern" (a conflict sign pattern that is not monotone).
    """

    def __init__(self, reason):
        super().__init__(reason)
        self.reason = reason


def _mag(*vals):
    m = 0.0
    for v in vals:
        v = abs(v)
        if v > m:
            m = v
    return m


class Bisector:
    """Breakpoints of the bisector of an ordered site pair.

    ``points`` holds tuples ``(s, x, y, lam, who, k)`` sorted by
    ``s = cross(q - p, (x, y))``.  ``who`` is 0 when ``p`` sits at vertex
    ``k`` of the clearance homothet, 1 for ``q`` and -1 for a synthetic anchor
    on a bisector without bends.  The two unbounded ends leave along the gauge
    vertices ``e_lo`` (towards s = -inf) and ``e_hi``.
    """

    __slots__ = ("px", "py", "qx", "qy", "ux", "uy", "points", "e_lo", "e_hi")

    def __init__(self, px, py, qx, qy, points, e_lo, e_hi):
        self.px, self.py, self.qx, self.qy = px, py, qx, qy
        self.ux, self.uy = qx - px, qy - py
        self.points = points
        self.e_lo, self.e_hi = e_lo, e_hi

    def bends(self):
        return [pt for pt in self.points if pt[4] >= 0]


class GaugeCore:
    """Evaluation of one polygon gauge in either float or exact arithmetic."""

    def __init__(self, vertices, normals, exact=False):
        self.k = len(vertices)
        self.vx = [v[0] for v in vertices]
        self.vy = [v[1] for v in vertices]
        self.ax = [a[0] for a in normals]
        self.ay = [a[1] for a in normals]
        self.exact = exact

    def gval(self, x, y):
        ax, ay = self.ax, self.ay
        best = ax[0] * x + ay[0] * y
        for j in range(1, self.k):
            v = ax[j] * x + ay[j] * y
            if v > best:
                best = v
        return best

    def _gval_pair(self, j0, j1, x, y):
        a = self.ax[j0] * x + self.ay[j0] * y
        b = self.ax[j1] * x + self.ay[j1] * y
        return a if a > b else b

    def _sign(self, v, scale):
        if self.exact:
            return (v > 0) - (v < 0)
        if abs(v) <= EPS * scale:
            raise Uncertain
        return 1 if v > 0 else -1

    def bisector(self, px, py, qx, qy):
        K = self.k
        vx, vy, ax, ay = self.vx, self.vy, self.ax, self.ay
        ux, uy = qx - px, qy - py
        um = _mag(ux, uy)
        pts = []
        for k in range(K):
            kn = (k + 1) % K
            kp = (k - 1) % K
            e1x, e1y = vx[kn] - vx[k], vy[kn] - vy[k]
            e0x, e0y = vx[kp] - vx[k], vy[kp] - vy[k]
            sc = 4.0 * um * _mag(e1x, e1y, e0x, e0y) if not self.exact else 0
            for who in (0, 1):
                if who == 0:
                    dx, dy, sx, sy = -ux, -uy, px, py
                else:
                    dx, dy, sx, sy = ux, uy, qx, qy
                c1 = self._sign(e1x * dy - e1y * dx, sc)
                c2 = self._sign(dx * e0y - dy * e0x, sc)
                if c1 == 0 or c2 == 0:
                    raise Degeneracy("parallel")
                if c1 < 0 or c2 < 0:
                    continue
                t = None
                for j in range(K):
                    ad = ax[j] * dx + ay[j] * dy
                    if ad > 0:
                        tj = (1 - (ax[j] * vx[k] + ay[j] * vy[k])) / ad
                        if t is None or tj < t:
                            t = tj
                lam = 1 / t
                x = sx + lam * vx[k]
                y = sy + lam * vy[k]
                pts.append((ux * y - uy * x, x, y, lam, who, k))
        pts.sort()
        if not self.exact:
            for a, b in zip(pts, pts[1:]):
                if b[0] - a[0] <= EPS * um * (1.0 + _mag(a[1], a[2], b[1], b[2])):
                    raise Uncertain
        e_lo, e_hi = self._ray_ends(ux, uy, um)
        if not pts:
            pts.append(self._anchor(px, py, qx, qy, ux, uy, e_hi))
        return Bisector(px, py, qx, qy, pts, e_lo, e_hi)

    def _ray_ends(self, ux, uy, um):
        K = self.k
        cr = [ux * self.vy[k] - uy * self.vx[k] for k in range(K)]
        order = sorted(range(K), key=cr.__getitem__)
        lo, hi = order[0], order[-1]
        sc = 4.0 * um * _mag(*self.vx, *self.vy) if not self.exact else 0
        if self._sign(cr[order[1]] - cr[lo], sc) == 0:
            raise Degeneracy("parallel")
        if self._sign(cr[hi] - cr[order[-2]], sc) == 0:
            raise Degeneracy("parallel")
        return lo, hi

    def _anchor(self, px, py, qx, qy, ux, uy, e_hi):
        # No bends: the bisector is one straight line with fixed contacts.
        K = self.k
        jp, jq = (e_hi - 1) % K, e_hi
        nx, ny = self.ax[jp] - self.ax[jq], self.ay[jp] - self.ay[jq]
        h = self.ax[jp] * px + self.ay[jp] * py - self.ax[jq] * qx - self.ay[jq] * qy
        nn = nx * nx + ny * ny
        x, y = nx * h / nn, ny * h / nn
        lam = self.gval(x - px, y - py)
        return (ux * y - uy * x, x, y, lam, -1, -1)

    def constraint(self, bis, cx, cy):
        """Where along ``bis`` the site ``c`` lies strictly inside the clearance.

        Returns ``(kind, s, x, y, lam)``; for LOWER (inside when s < s*) and
        UPPER (inside when s > s*) the tail holds the circumscribing homothet
        through p, q and c.
        """
        pts = bis.points
        K = self.k
        exact = self.exact
        cm = _mag(cx, cy)
        first, last = pts[0], pts[-1]
        lo_j = bis.e_lo
        hi_j = bis.e_hi
        vals = []
        scales = []
        x, y, lam = first[1], first[2], first[3]
        vals.append(self._gval_pair((lo_j - 1) % K, lo_j, x - cx, y - cy) - lam)
        scales.append(1.0 + lam + cm + _mag(x, y) if not exact else 0)
        for pt in pts:
            x, y, lam = pt[1], pt[2], pt[3]
            vals.append(self.gval(x - cx, y - cy) - lam)
            scales.append(1.0 + lam + cm + _mag(x, y) if not exact else 0)
        x, y, lam = last[1], last[2], last[3]
        vals.append(self._gval_pair((hi_j - 1) % K, hi_j, x - cx, y - cy) - lam)
        scales.append(scales[-1])
        signs = [self._sign(v, s) for v, s in zip(vals, scales)]
        neg = [i for i, s in enumerate(signs) if s < 0]
        if not neg:
            return (NEVER, None, None, None, None)
        pos = [i for i, s in enumerate(signs) if s > 0]
        if not pos:
            return (ALWAYS, None, None, None, None)
        if neg[-1] < pos[0]:
            kind, a, b = LOWER, neg[-1], pos[0]
        elif pos[-1] < neg[0]:
            kind, a, b = UPPER, pos[-1], neg[0]
        else:
            if exact:
                raise Degeneracy("pattern")
            raise Uncertain
        if b - a > 1:
            # exact zero at a breakpoint strictly between the sign runs
            pt = pts[a]
            return (kind, pt[0], pt[1], pt[2], pt[3])
        m = len(pts)
        if a == 0:
            pt = pts[0]
            x0, y0, l0 = pt[1], pt[2], pt[3]
            dx, dy, dl = self.vx[lo_j], self.vy[lo_j], 1
            f0 = vals[1]
        elif a == m:
            pt = pts[-1]
            x0, y0, l0 = pt[1], pt[2], pt[3]
            dx, dy, dl = self.vx[hi_j], self.vy[hi_j], 1
            f0 = vals[m]
        else:
            p0, p1 = pts[a - 1], pts[a]
            x0, y0, l0 = p0[1], p0[2], p0[3]
            dx, dy, dl = p1[1] - x0, p1[2] - y0, p1[3] - l0
            f0 = vals[a]
        t = self._root(x0 - cx, y0 - cy, l0, dx, dy, dl, f0 < 0)
        x, y, lam = x0 + t * dx, y0 + t * dy, l0 + t * dl
        return (kind, bis.ux * y - bis.uy * x, x, y, lam)

    def _root(self, rx, ry, l0, dx, dy, dl, rising):
        best = None
        for j in range(self.k):
            alpha = self.ax[j] * rx + self.ay[j] * ry - l0
            beta = self.ax[j] * dx + self.ay[j] * dy - dl
            if rising:
                if beta > 0:
                    t = -alpha / beta
                    if best is None or t < best:
                        best = t
            elif beta < 0 and alpha > 0:
                t = -alpha / beta
                if best is None or t > best:
                    best = t
        if best is None or best < 0:
            return 0 * dl
        return best
