"""Van Emde Boas set over a small integer universe."""
from __future__ import annotations


class VEB:
    """Integer set on [0, u) with O(log log u) insert, delete and successor.

    The universe is rounded up to a power of two.  Clusters are allocated
    lazily, so an empty set costs almost nothing.
    """

    __slots__ = ("u", "lo_bits", "min", "max", "summary", "clusters")

    def __init__(self, universe: int):
        u = 2
        while u < universe:
            u *= 2
        self.u = u
        self.lo_bits = (u.bit_length() - 1) // 2
        self.min = None
        self.max = None
        self.summary = None
        self.clusters = {}

    def _split(self, x):
        return x >> self.lo_bits, x & ((1 << self.lo_bits) - 1)

    def _child(self):
        return VEB(1 << self.lo_bits)

    def __bool__(self):
        return self.min is not None

    def __contains__(self, x):
        if self.min is None:
            return False
        if x == self.min or x == self.max:
            return True
        if self.u == 2:
            return False
        hi, lo = self._split(x)
        c = self.clusters.get(hi)
        return c is not None and lo in c

    def insert(self, x: int):
        if not 0 <= x < self.u:
            raise ValueError(f"{x} outside universe [0, {self.u})")
        if self.min is None:
            self.min = self.max = x
            return
        if x == self.min or x == self.max:
            return
        if x < self.min:
            x, self.min = self.min, x
        if x > self.max:
            self.max = x
        if self.u == 2:
            return
        hi, lo = self._split(x)
        c = self.clusters.get(hi)
        if c is None:
            c = self.clusters[hi] = self._child()
        if c.min is None:
            if self.summary is None:
                self.summary = VEB(self.u >> self.lo_bits)
            self.summary.insert(hi)
        c.insert(lo)

    def delete(self, x: int):
        if self.min is None:
            return
        if self.min == self.max:
            if x == self.min:
                self.min = self.max = None
            return
        if self.u == 2:
            if x == 0:
                self.min = 1
            elif x == 1:
                self.max = 0
            return
        if x == self.min:
            first = self.summary.min
            x = (first << self.lo_bits) | self.clusters[first].min
            self.min = x
        hi, lo = self._split(x)
        c = self.clusters.get(hi)
        if c is None:
            return
        c.delete(lo)
        if c.min is None:
            del self.clusters[hi]
            self.summary.delete(hi)
            if x == self.max:
                top = self.summary.max
                if top is None:
                    self.max = self.min
                else:
                    self.max = (top << self.lo_bits) | self.clusters[top].max
        elif x == self.max:
            self.max = (hi << self.lo_bits) | c.max

    def successor(self, x: int):
        """Smallest member strictly greater than x, or None."""
        if self.min is None:
            return None
        if x < self.min:
            return self.min
        if x >= self.max:
            return None
        if self.u == 2:
            return self.max
        hi, lo = self._split(x)
        c = self.clusters.get(hi)
        if c is not None and c.max is not None and lo < c.max:
            return (hi << self.lo_bits) | c.successor(lo)
        nxt = self.summary.successor(hi) if self.summary is not None else None
        if nxt is None:
            return None
        return (nxt << self.lo_bits) | self.clusters[nxt].min

    def __iter__(self):
        x = self.min
        while x is not None:
            yield x
            x = self.successor(x)

    def clear(self):
        self.min = self.max = None
        self.summary = None
        self.clusters = {}


def veb_sort(values, universe):
    """Sort distinct integers from [0, universe) through a scratch vEB set."""
    s = VEB(universe)
    for v in values:
        s.insert(v)
    return list(s)
