import math
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import random_points
from oracles import metric_gauge, net_tree_violation, pruned_shape, walk_nca
from sivor.errors import DifferentClusters, MissingClusterRootRep, TauTooSmall
from sivor.gauge import named_gauge
from sivor.nettree import (NEG_INF, NetTree, build_net_tree, compress_to_subset, mark_and_prune,
                           nca_query, partition_clusters, verify_net_tree)

GAUGES = {name: named_gauge(name) for name in ("square", "triangle", "pentagon")}
METRICS = {name: metric_gauge(g.vertices_Q) for name, g in GAUGES.items()}


def labelled(pts):
    return {100 + i: p for i, p in enumerate(pts)}


def parents_of(t):
    par = {t.root: None}
    for u, ch in t.kids.items():
        for w in ch:
            par[w] = u
    return par


def rebuilt(t, kids):
    return NetTree(t.points, t.root, kids, t.lev, t.rep, t.leaf_label, t.tau)


@settings(max_examples=40, deadline=None)
@given(st.sampled_from(sorted(GAUGES)),
       st.lists(st.tuples(st.floats(-1, 1, allow_nan=False), st.floats(-1, 1, allow_nan=False)),
                min_size=2, max_size=40, unique=True),
       st.sampled_from([11, 12, 16]))
def test_net_tree_properties(name, pts, tau):
    t = build_net_tree(GAUGES[name], labelled(pts), tau)
    assert net_tree_violation(t, METRICS[name]) is None
    assert verify_net_tree(t, GAUGES[name]) is None
    assert sorted(t.labels()) == sorted(labelled(pts))


def test_512_points_pass_both_checks():
    rng = random.Random(512)
    for name, g in GAUGES.items():
        t = build_net_tree(g, labelled(random_points(rng, 512)), 11)
        assert verify_net_tree(t, g) is None
        assert net_tree_violation(t, METRICS[name]) is None
        assert max(len(t.children(u)) for u in t.preorder()) <= 64


def test_single_point_is_one_leaf():
    t = build_net_tree(GAUGES["square"], {7: (0.3, 0.1)}, 11)
    assert t.is_leaf(t.root) and t.leaf_label[t.root] == 7
    assert t.lev[t.root] == NEG_INF


def test_two_far_points():
    g = GAUGES["square"]
    p, q = (0.0, 0.0), (300.0, 40.0)
    t = build_net_tree(g, {1: p, 2: q}, 11)
    ch = t.children(t.root)
    assert len(ch) == 2 and all(t.is_leaf(w) for w in ch)
    # (d) and (e) pin the root level to [log d - log(2t/(t-1)), log d + 1 + log(2(t-1)/(t-5)))
    lg = math.log(g.mdist(p, q), 11)
    assert lg - math.log(22 / 10, 11) <= t.lev[t.root] < lg + 1 + math.log(20 / 6, 11)


def test_tau_below_eleven_is_rejected():
    with pytest.raises(TauTooSmall):
        build_net_tree(GAUGES["square"], {1: (0, 0), 2: (1, 1)}, 10)


def test_unary_node_fails_check_c():
    g = GAUGES["triangle"]
    t = build_net_tree(g, labelled(random_points(random.Random(3), 30)), 11)
    u = next(u for u in t.preorder() if not t.is_leaf(u))
    c = t.children(u)[0]
    w = len(t.lev)
    lev, rep = dict(enumerate(t.lev)), dict(enumerate(t.rep))
    lev[w] = t.lev[u] - 0.5
    rep[w] = t.rep[c]
    kids = dict(t.kids)
    kids[u] = (w,) + kids[u][1:]
    kids[w] = (c,)
    bad = NetTree(t.points, t.root, kids, lev, rep, t.leaf_label, t.tau)
    assert verify_net_tree(bad, g).startswith("(c)")
    assert net_tree_violation(bad, METRICS["triangle"]) == "c"


def test_moved_leaf_fails_check_e():
    g = GAUGES["square"]
    t = build_net_tree(g, {1: (0.0, 0.0), 2: (0.1, 0.0), 3: (0.0, 0.1),
                           4: (5.0, 5.0), 5: (5.1, 5.0)}, 11)
    par = parents_of(t)
    leaf3 = t.leaf_of(3)
    near = par[leaf3]
    far = par[t.leaf_of(5)]
    assert len(t.children(near)) == 3 and t.rep[leaf3] != t.rep[near]
    kids = dict(t.kids)
    kids[near] = tuple(w for w in kids[near] if w != leaf3)
    kids[far] = kids[far] + (leaf3,)
    bad = rebuilt(t, kids)
    assert verify_net_tree(bad, g).startswith("(e)")
    assert net_tree_violation(bad, METRICS["square"]) == "e"


# -- clusters -----------------------------------------------------------------

def caterpillar():
    """Left spine 0 > 1 > ... > 5; leaves 11, 12 under node 5, then 13..17 up the spine."""
    pts = {i: (float(i), 0.0) for i in range(1, 8)}
    leaf = {10 + i: i for i in range(1, 8)}
    kids = {0: (1, 17), 1: (2, 16), 2: (3, 15), 3: (4, 14), 4: (5, 13), 5: (11, 12)}
    lev = {u: 6 - u for u in range(6)}
    lev.update({w: NEG_INF for w in leaf})
    rep = {0: 1, 1: 1, 2: 1, 3: 1, 4: 1, 5: 1}
    rep.update(leaf)
    return NetTree(pts, 0, kids, lev, rep, leaf, 11)


def test_caterpillar_clusters_by_three():
    t = caterpillar()
    cs = partition_clusters(t, 3)
    got = [sorted(t.leaf_label[u] for u in c.leaves) for c in cs]
    assert got == [[1, 2, 3], [4, 5, 6], [7]]
    assert cs[0].root == 4 and cs[1].root == 1 and cs[2].root == 17
    assert cs[1].portals == [4]
    assert 0 not in t.cluster_of


def test_one_cluster_when_m_covers_all_leaves():
    t = caterpillar()
    (c,) = partition_clusters(t, 7)
    assert c.root == t.root and sorted(c.nodes) == sorted(t.preorder())


def test_every_leaf_clustered_once():
    rng = random.Random(5)
    t = build_net_tree(GAUGES["pentagon"], labelled(random_points(rng, 200)), 11)
    for m in (1, 2, 5, 13):
        cs = partition_clusters(t, m)
        seen = [u for c in cs for u in c.leaves]
        assert sorted(seen) == sorted(t.leaf_label)
        nodes = [u for c in cs for u in c.nodes]
        assert len(nodes) == len(set(nodes))


def test_nca_against_upward_walk():
    rng = random.Random(10)
    t = build_net_tree(GAUGES["triangle"], labelled(random_points(rng, 300)), 11)
    cs = partition_clusters(t, 16)
    par = parents_of(t)
    queries = 0
    while queries < 10000:
        c = rng.choice(cs)
        u, v = rng.choice(c.nodes), rng.choice(c.nodes)
        assert nca_query(c, u, v) == walk_nca(par, u, v)
        queries += 1


def test_nca_simple_cases():
    t = caterpillar()
    (c,) = partition_clusters(t, 7)
    assert nca_query(c, 2, 13) == 2
    assert nca_query(c, 11, 12) == 5
    assert nca_query(c, 12, 17) == 0


def test_nca_rejects_nodes_of_two_clusters():
    t = caterpillar()
    cs = partition_clusters(t, 3)
    with pytest.raises(DifferentClusters):
        nca_query(cs[0], 11, 14)


# -- compression --------------------------------------------------------------

def _tree_and_clusters(seed, n, m, name="square"):
    rng = random.Random(seed)
    t = build_net_tree(GAUGES[name], labelled(random_points(rng, n)), 11)
    return t, partition_clusters(t, m)


def test_compress_all_leaves_is_identity():
    t, cs = _tree_and_clusters(1, 60, 4)
    ct = compress_to_subset(t, cs, t.labels())
    assert ct.root == t.root and ct.shape() == t.shape()


def test_compress_to_cluster_root_reps():
    t, cs = _tree_and_clusters(2, 80, 5)
    R = {t.rep[c.root] for c in cs}
    ct = compress_to_subset(t, cs, R)
    root, shape = pruned_shape(t, R)
    assert (ct.root, ct.shape()) == (root, shape)
    assert sorted(ct.labels()) == sorted(R)


def test_random_compressions_match_mark_and_prune():
    rng = random.Random(200)
    for trial in range(40):
        t, cs = _tree_and_clusters(trial, rng.randint(2, 120), rng.randint(1, 9),
                                   rng.choice(sorted(GAUGES)))
        R = {t.rep[c.root] for c in cs} | set(rng.sample(t.labels(), rng.randint(0, len(t.labels()))))
        ct = compress_to_subset(t, cs, R)
        root, shape = pruned_shape(t, R)
        assert (ct.root, ct.shape()) == (root, shape)
        assert ct == mark_and_prune(t, R)
        # the vEB sets are scratch space and come back empty
        assert all(not c.eb for c in cs)


def test_compression_is_idempotent():
    rng = random.Random(7)
    t, cs = _tree_and_clusters(7, 100, 6, "triangle")
    for _ in range(30):
        U1 = set(rng.sample(t.labels(), rng.randint(1, 100)))
        U2 = set(rng.sample(sorted(U1), rng.randint(1, len(U1))))
        assert mark_and_prune(mark_and_prune(t, U1), U2) == mark_and_prune(t, U2)


def test_missing_cluster_root_rep_is_rejected():
    t, cs = _tree_and_clusters(3, 40, 3)
    R = set(t.labels()) - {t.rep[cs[-1].root]}
    with pytest.raises(MissingClusterRootRep):
        compress_to_subset(t, cs, R)
