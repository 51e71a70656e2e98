# cython: language_level=3, boundscheck=False, cdivision=True
"""Compiled float path of the gauge kernels; mirrors ``_kernels_py.GaugeCore``."""

from libc.math cimport fabs

from ._kernels_py import ALWAYS, LOWER, NEVER, UPPER, Bisector, Degeneracy, Uncertain

cdef enum:
    MAXK = 64
cdef double EPS = 1e-10


cdef inline double _mag2(double a, double b):
    a = fabs(a)
    b = fabs(b)
    return a if a > b else b


cdef class GaugeCore:
    cdef public int k
    cdef double vx[MAXK]
    cdef double vy[MAXK]
    cdef double ax[MAXK]
    cdef double ay[MAXK]
    cdef double vmag
    cdef public bint exact

    def __init__(self, vertices, normals, exact=False):
        if exact:
            raise ValueError("the compiled kernel has no exact mode")
        if len(vertices) > MAXK:
            raise ValueError("polygon has too many vertices for the compiled kernel")
        self.k = len(vertices)
        self.exact = False
        cdef int i
        self.vmag = 0.0
        for i in range(self.k):
            self.vx[i] = float(vertices[i][0])
            self.vy[i] = float(vertices[i][1])
            self.ax[i] = float(normals[i][0])
            self.ay[i] = float(normals[i][1])
            self.vmag = max(self.vmag, fabs(self.vx[i]), fabs(self.vy[i]))

    cpdef double gval(self, double x, double y):
        cdef double best = self.ax[0] * x + self.ay[0] * y
        cdef double v
        cdef int j
        for j in range(1, self.k):
            v = self.ax[j] * x + self.ay[j] * y
            if v > best:
                best = v
        return best

    cdef inline double _gval_pair(self, int j0, int j1, double x, double y):
        cdef double a = self.ax[j0] * x + self.ay[j0] * y
        cdef double b = self.ax[j1] * x + self.ay[j1] * y
        return a if a > b else b

    cdef inline int _sign(self, double v, double scale) except -2:
        if fabs(v) <= EPS * scale:
            raise Uncertain
        return 1 if v > 0 else -1

    def bisector(self, double px, double py, double qx, double qy):
        cdef int K = self.k
        cdef double ux = qx - px, uy = qy - py
        cdef double um = _mag2(ux, uy)
        cdef int k, kn, kp, who, j, c1, c2
        cdef double e1x, e1y, e0x, e0y, sc, dx, dy, sx, sy, t, tj, ad, lam, x, y
        cdef bint have
        pts = []
        for k in range(K):
            kn = (k + 1) % K
            kp = (k - 1 + K) % K
            e1x = self.vx[kn] - self.vx[k]
            e1y = self.vy[kn] - self.vy[k]
            e0x = self.vx[kp] - self.vx[k]
            e0y = self.vy[kp] - self.vy[k]
            sc = 4.0 * um * max(fabs(e1x), fabs(e1y), fabs(e0x), fabs(e0y))
            for who in range(2):
                if who == 0:
                    dx, dy, sx, sy = -ux, -uy, px, py
                else:
                    dx, dy, sx, sy = ux, uy, qx, qy
                c1 = self._sign(e1x * dy - e1y * dx, sc)
                c2 = self._sign(dx * e0y - dy * e0x, sc)
                if c1 < 0 or c2 < 0:
                    continue
                have = False
                t = 0.0
                for j in range(K):
                    ad = self.ax[j] * dx + self.ay[j] * dy
                    if ad > 0:
                        tj = (1 - (self.ax[j] * self.vx[k] + self.ay[j] * self.vy[k])) / ad
                        if not have or tj < t:
                            t = tj
                            have = True
                lam = 1 / t
                x = sx + lam * self.vx[k]
                y = sy + lam * self.vy[k]
                pts.append((ux * y - uy * x, x, y, lam, who, k))
        pts.sort()
        cdef int i
        for i in range(len(pts) - 1):
            a = pts[i]
            b = pts[i + 1]
            if b[0] - a[0] <= EPS * um * (1.0 + max(fabs(a[1]), fabs(a[2]), fabs(b[1]), fabs(b[2]))):
                raise Uncertain
        e_lo, e_hi = self._ray_ends(ux, uy, um)
        if not pts:
            pts.append(self._anchor(px, py, qx, qy, ux, uy, e_hi))
        return Bisector(px, py, qx, qy, pts, e_lo, e_hi)

    cdef tuple _ray_ends(self, double ux, double uy, double um):
        cdef int K = self.k
        cdef int k
        cr = [ux * self.vy[k] - uy * self.vx[k] for k in range(K)]
        order = sorted(range(K), key=cr.__getitem__)
        lo, hi = order[0], order[-1]
        cdef double sc = 4.0 * um * self.vmag
        self._sign(cr[order[1]] - cr[lo], sc)
        self._sign(cr[hi] - cr[order[-2]], sc)
        return lo, hi

    cdef tuple _anchor(self, double px, double py, double qx, double qy,
                       double ux, double uy, int e_hi):
        cdef int K = self.k
        cdef int jp = (e_hi - 1 + K) % K, jq = e_hi
        cdef double nx = self.ax[jp] - self.ax[jq], ny = self.ay[jp] - self.ay[jq]
        cdef double h = self.ax[jp] * px + self.ay[jp] * py - self.ax[jq] * qx - self.ay[jq] * qy
        cdef double nn = nx * nx + ny * ny
        cdef double x = nx * h / nn, y = ny * h / nn
        cdef double lam = self.gval(x - px, y - py)
        return (ux * y - uy * x, x, y, lam, -1, -1)

    def constraint(self, bis, double cx, double cy):
        pts = bis.points
        cdef int K = self.k
        cdef double cm = _mag2(cx, cy)
        cdef int lo_j = bis.e_lo, hi_j = bis.e_hi
        cdef int m = len(pts)
        cdef double x, y, lam, v, sc, last_sc = 0.0
        cdef int i, s, a, b, first_neg = -1, last_neg = -1, first_pos = -1, last_pos = -1
        cdef list vals = [0.0] * (m + 2)
        first = pts[0]
        x, y, lam = first[1], first[2], first[3]
        v = self._gval_pair((lo_j - 1 + K) % K, lo_j, x - cx, y - cy) - lam
        sc = 1.0 + lam + cm + _mag2(x, y)
        vals[0] = v
        s = self._sign(v, sc)
        if s < 0:
            first_neg = last_neg = 0
        else:
            first_pos = last_pos = 0
        for i in range(m):
            pt = pts[i]
            x, y, lam = pt[1], pt[2], pt[3]
            v = self.gval(x - cx, y - cy) - lam
            sc = 1.0 + lam + cm + _mag2(x, y)
            last_sc = sc
            vals[i + 1] = v
            s = self._sign(v, sc)
            if s < 0:
                if first_neg < 0:
                    first_neg = i + 1
                last_neg = i + 1
            else:
                if first_pos < 0:
                    first_pos = i + 1
                last_pos = i + 1
        last = pts[m - 1]
        x, y, lam = last[1], last[2], last[3]
        v = self._gval_pair((hi_j - 1 + K) % K, hi_j, x - cx, y - cy) - lam
        vals[m + 1] = v
        s = self._sign(v, last_sc)
        if s < 0:
            if first_neg < 0:
                first_neg = m + 1
            last_neg = m + 1
        else:
            if first_pos < 0:
                first_pos = m + 1
            last_pos = m + 1
        if first_neg < 0:
            return (NEVER, None, None, None, None)
        if first_pos < 0:
            return (ALWAYS, None, None, None, None)
        if last_neg < first_pos:
            kind, a, b = LOWER, last_neg, first_pos
        elif last_pos < first_neg:
            kind, a, b = UPPER, last_pos, first_neg
        else:
            raise Uncertain
        cdef double x0, y0, l0, dx, dy, dl, f0, t
        if a == 0:
            pt = pts[0]
            x0, y0, l0 = pt[1], pt[2], pt[3]
            dx, dy, dl = self.vx[lo_j], self.vy[lo_j], 1.0
            f0 = vals[1]
        elif a == m:
            pt = pts[m - 1]
            x0, y0, l0 = pt[1], pt[2], pt[3]
            dx, dy, dl = self.vx[hi_j], self.vy[hi_j], 1.0
            f0 = vals[m]
        else:
            p0 = pts[a - 1]
            p1 = pts[a]
            x0, y0, l0 = p0[1], p0[2], p0[3]
            dx, dy, dl = p1[1] - x0, p1[2] - y0, p1[3] - l0
            f0 = vals[a]
        t = self._root(x0 - cx, y0 - cy, l0, dx, dy, dl, f0 < 0)
        x = x0 + t * dx
        y = y0 + t * dy
        lam = l0 + t * dl
        return (kind, bis.ux * y - bis.uy * x, x, y, lam)

    cdef double _root(self, double rx, double ry, double l0, double dx, double dy,
                      double dl, bint rising):
        cdef double best = 0.0, alpha, beta, t
        cdef bint have = False
        cdef int j
        for j in range(self.k):
            alpha = self.ax[j] * rx + self.ay[j] * ry - l0
            beta = self.ax[j] * dx + self.ay[j] * dy - dl
            if rising:
                if beta > 0:
                    t = -alpha / beta
                    if not have or t < best:
                        best = t
                        have = True
            elif beta < 0 and alpha > 0:
                t = -alpha / beta
                if not have or t > best:
                    best = t
                    have = True
        if not have or best < 0:
            return 0.0
        return best
