import math
import random
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import Gauge, hull, in_convex, metric_gauge, minkowski, ray_distance
from sivor.gauge import (Homothet, bisector, circumscribe_three, conflicts, dummy_frame,
                         gauge_distance, largest_empty_homothet, make_gauge, metric_distance,
                         named_gauge)
from sivor.errors import Degenerate, GPViolation, NonConvex, OriginOutside, ParallelSides, Unbounded
from sivor.gauge import NAMED_GAUGES

SQUARE = [(-1, -1), (1, -1), (1, 1), (-1, 1)]
TRIANGLE = [(-1, -1), (2, -1), (-1, 2)]

coord = st.floats(-1, 1, allow_nan=False, allow_infinity=False)
point = st.tuples(coord, coord)
gauge_name = st.sampled_from(sorted(NAMED_GAUGES))


def test_square_is_its_own_reflection():
    g = make_gauge(SQUARE)
    assert set(g.vertices_Qstar) == set(g.vertices_Q)
    assert set(g.vertices_Qhat) == {(2, 2), (-2, 2), (-2, -2), (2, -2)}


def test_triangle_reflection_and_sum():
    g = make_gauge(TRIANGLE)
    assert set(g.vertices_Qstar) == {(1, 1), (-2, 1), (1, -2)}
    expected = {(3, 0), (0, 3), (-3, 3), (-3, 0), (0, -3), (3, -3)}
    assert set(g.vertices_Qhat) == expected
    # the listed hexagon is also what brute enumeration of vertex pairs gives
    brute = minkowski([(-x, -y) for x, y in TRIANGLE], TRIANGLE)
    assert {(float(x), float(y)) for x, y in brute} == expected


@pytest.mark.parametrize("name", sorted(NAMED_GAUGES))
def test_metric_polygon_is_centrally_symmetric(name):
    g = named_gauge(name)
    hat = set(g.vertices_Qhat)
    assert {(-x, -y) for x, y in hat} == hat
    assert len(hat) <= 2 * g.k


@pytest.mark.parametrize("verts, err", [
    ([(-1, -1), (1, -1), (1, 1), (-1, 1), (0, 2), (-2, 0)], NonConvex),
    ([(1, 1), (3, 1), (1, 3)], OriginOutside),
    # two sides running the same way along y = -1
    ([(-1, -1), (0, -1), (1, -1), (1, 1), (-1, 1)], ParallelSides),
    ([(0, 0), (1, 1)], NonConvex),
])
def test_bad_gauges_rejected(verts, err):
    with pytest.raises(err):
        make_gauge(verts)


def test_clockwise_input_is_reoriented():
    assert make_gauge(list(reversed(TRIANGLE))) == make_gauge(TRIANGLE)


def test_gauge_distance_examples():
    sq, tri = make_gauge(SQUARE), make_gauge(TRIANGLE)
    assert gauge_distance(sq, (0, 0), (3, 1)) == 3
    assert gauge_distance(tri, (0, 0), (0, -2)) == pytest.approx(2)
    for y in [(1, 0), (-1, 0), (0, 1), (2, -1)]:
        assert gauge_distance(tri, (0, 0), y) == pytest.approx(1)
        assert ray_distance(TRIANGLE, (0.0, 0.0), y) == pytest.approx(1, abs=1e-9)
    assert ray_distance(TRIANGLE, (0.0, 0.0), (0, -2)) == pytest.approx(2, abs=1e-9)


def test_metric_distance_examples():
    assert metric_distance(make_gauge(SQUARE), (0, 0), (2, 0)) == pytest.approx(1)
    assert metric_distance(make_gauge(TRIANGLE), (0, 0), (1, 1)) == pytest.approx(2 / 3)
    assert metric_distance(make_gauge(TRIANGLE), (0.3, 0.7), (0.3, 0.7)) == 0


@settings(max_examples=300, deadline=None)
@given(gauge_name, point, point)
def test_gauge_distance_matches_bisection(name, x, y):
    Q = NAMED_GAUGES[name]
    got = gauge_distance(named_gauge(name), x, y)
    assert got == pytest.approx(ray_distance(Q, x, y), abs=1e-6)
    assert got == pytest.approx(float(Gauge(Q).dist(x, y)), rel=1e-12, abs=1e-15)


@settings(max_examples=200, deadline=None)
@given(gauge_name, point, point, st.floats(0.01, 50))
def test_gauge_distance_homogeneous(name, x, y, s):
    g = named_gauge(name)
    far = (x[0] + s * (y[0] - x[0]), x[1] + s * (y[1] - x[1]))
    assert gauge_distance(g, x, far) == pytest.approx(s * gauge_distance(g, x, y), rel=1e-9,
                                                      abs=1e-12)


@settings(max_examples=300, deadline=None)
@given(gauge_name, point, point, point)
def test_metric_is_symmetric_and_triangular(name, x, y, z):
    g = named_gauge(name)
    dxy = metric_distance(g, x, y)
    assert dxy == pytest.approx(metric_distance(g, y, x), abs=1e-12)
    assert metric_distance(g, x, z) <= dxy + metric_distance(g, y, z) + 1e-12
    assert dxy == pytest.approx(float(metric_gauge(NAMED_GAUGES[name]).dist(x, y)), abs=1e-12)


@pytest.mark.parametrize("name", sorted(NAMED_GAUGES))
def test_metric_axioms_on_many_triples(name):
    g = named_gauge(name)
    rng = random.Random(3)
    for _ in range(20000):
        x, y, z = [(rng.uniform(-1, 1), rng.uniform(-1, 1)) for _ in range(3)]
        dxy = metric_distance(g, x, y)
        assert abs(dxy - metric_distance(g, y, x)) <= 1e-12
        assert metric_distance(g, x, z) <= dxy + metric_distance(g, y, z) + 1e-12


def test_circumscribe_examples():
    h = circumscribe_three(make_gauge(SQUARE), (0, 0), (2, 0), (1, 1))
    assert h.center == pytest.approx((1, 0)) and h.scale == pytest.approx(1)
    # three corners of 2*Q* + (5, 5) for the triangle gauge
    h = circumscribe_three(make_gauge(TRIANGLE), (7, 7), (1, 7), (7, 1))
    assert h.center == pytest.approx((5, 5)) and h.scale == pytest.approx(2)
    with pytest.raises(Degenerate):
        circumscribe_three(make_gauge(SQUARE), (0, 0), (0, 0), (1, 1))


@pytest.mark.parametrize("name", sorted(NAMED_GAUGES))
def test_circumscribe_round_trip(name):
    g = named_gauge(name)
    G = Gauge(NAMED_GAUGES[name])
    rng = random.Random(7)
    star = [(-Fraction(x), -Fraction(y)) for x, y in NAMED_GAUGES[name]]
    k = len(star)
    done = 0
    while done < 150:
        c = (Fraction(rng.randint(-500, 500), 1000), Fraction(rng.randint(-500, 500), 1000))
        s = Fraction(rng.randint(50, 2000), 1000)
        edges = rng.sample(range(k), 3)
        pts = []
        for e in edges:
            a, b = star[e], star[(e + 1) % k]
            t = Fraction(rng.randint(1, 999), 1000)
            pts.append((c[0] + s * (a[0] + t * (b[0] - a[0])), c[1] + s * (a[1] + t * (b[1] - a[1]))))
        # the three points are on the boundary of s*Q* + c by construction
        assert all(G.dist(p, c) == s for p in pts)
        h = circumscribe_three(g, *pts)
        assert h is not None
        assert h.center == pytest.approx((float(c[0]), float(c[1])), rel=1e-9, abs=1e-12)
        assert h.scale == pytest.approx(float(s), rel=1e-9)
        done += 1


def test_largest_empty_homothet_examples():
    g = make_gauge(SQUARE)
    h = largest_empty_homothet(g, (1, 0), [(0, 0), (2, 0)])
    assert h.scale == 1
    assert gauge_distance(g, (0, 0), h.center) == gauge_distance(g, (2, 0), h.center) == 1
    assert largest_empty_homothet(g, (0.5, 0.5), [(0.5, 0.5), (1, 1)]).scale == 0
    fr = dummy_frame(g)
    h = largest_empty_homothet(g, fr.center, fr.dummies)
    assert h.scale == min(gauge_distance(g, s, fr.center) for s in fr.dummies)
    with pytest.raises(Unbounded):
        largest_empty_homothet(g, (0, 0), [])


@settings(max_examples=200, deadline=None)
@given(gauge_name, point, st.lists(point, min_size=1, max_size=12))
def test_largest_empty_homothet_is_empty_and_touches(name, x, sites):
    g = named_gauge(name)
    h = largest_empty_homothet(g, x, sites)
    ds = [gauge_distance(g, s, x) for s in sites]
    assert all(dv >= h.scale - 1e-12 for dv in ds)
    assert min(abs(dv - h.scale) for dv in ds) <= 1e-12


def test_conflict_examples():
    g = make_gauge(SQUARE)
    h = Homothet((1, 0), 1)
    assert conflicts(g, (1, 0.5), h)
    assert conflicts(g, (1, 0), h)
    assert conflicts(g, (1, 0), Homothet((1, 0), 0))
    assert not conflicts(g, (5, 5), h)
    assert conflicts(g, (2, 1), h)          # closed: corners count
    assert not conflicts(g, (2.000001, 1), h)


@pytest.mark.parametrize("name", sorted(NAMED_GAUGES))
def test_bisector_points_are_equidistant(name):
    g = named_gauge(name)
    rng = random.Random(11)
    for _ in range(300):
        p = (rng.uniform(-1, 1), rng.uniform(-1, 1))
        q = (rng.uniform(-1, 1), rng.uniform(-1, 1))
        b = bisector(g, p, q)
        assert len(b.breakpoints) <= 2 * g.k
        for z in b.sample(48):
            assert abs(gauge_distance(g, p, z) - gauge_distance(g, q, z)) <= 1e-9


def test_bisector_example_square():
    g = make_gauge(SQUARE)
    b = bisector(g, (0, 0), (2, 1))
    for z in b.sample(200, span=10):
        assert abs(gauge_distance(g, (0, 0), z) - gauge_distance(g, (2, 1), z)) <= 1e-9


def test_bisector_through_midpoint_for_symmetric_gauge():
    g = named_gauge("square")
    rng = random.Random(2)
    for _ in range(50):
        m = (rng.uniform(-1, 1), rng.uniform(-1, 1))
        v = (rng.uniform(-1, 1), rng.uniform(-1, 1))
        p, q = (m[0] - v[0], m[1] - v[1]), (m[0] + v[0], m[1] + v[1])
        pts = bisector(g, p, q).sample(400, span=4)
        # the polyline crosses the segment pq at m
        assert min(math.dist(z, m) for z in pts) < 0.05
        assert gauge_distance(g, p, m) == pytest.approx(gauge_distance(g, q, m))


def test_bisector_rejects_side_parallel_pairs():
    with pytest.raises(GPViolation):
        bisector(make_gauge(SQUARE), (0, 0), (1, 0))
    with pytest.raises(Degenerate):
        bisector(make_gauge(SQUARE), (0.3, 0.1), (0.3, 0.1))


@pytest.mark.parametrize("name", sorted(NAMED_GAUGES))
def test_dummy_frame_covers_box(name):
    g = named_gauge(name)
    fr = dummy_frame(g)
    assert len(fr.dummies) <= 2 * g.k + 4
    lam = fr.sweep_scale
    star = [(-x, -y) for x, y in g.vertices_Q]
    box = [(sx * fr.half, sy * fr.half) for sx in (-1, 1) for sy in (-1, 1)]
    rng = random.Random(5)
    centres = box + [(rng.uniform(-1, 1), rng.uniform(-1, 1)) for _ in range(200)]
    for x in centres:
        poly = [(x[0] + lam * a, x[1] + lam * b) for a, b in star]
        assert all(in_convex(poly, c, slack=1e-9) for c in box)
    for d in fr.dummies:
        assert not fr.contains(d)


def test_dummy_frame_dummies_avoid_side_directions():
    for name in NAMED_GAUGES:
        g = named_gauge(name)
        fr = dummy_frame(g)
        for i, a in enumerate(fr.dummies):
            for b in fr.dummies[i + 1:]:
                bisector(g, a, b)  # raises on a side-parallel pair


def test_hull_oracle_sanity():
    assert hull([(0, 0), (1, 0), (1, 1), (0, 1), (0.5, 0.5)]) == [(0, 0), (1, 0), (1, 1), (0, 1)]
