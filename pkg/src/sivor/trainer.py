"""Training: learn S, its diagram, the point-location structures and the region split."""
from __future__ import annotations

import logging
import math
import random
import time
from dataclasses import dataclass, field

from .division import Division, build_m2_division
from .errors import BadEpsilon, MTooLarge, TauTooSmall
from .gauge import BoundingFrame, ConvexGauge, dummy_frame
from .locate import UniformLocator, WeightedLocator
from .mixture import MixtureModel, sample_instance
from .nettree import NetTree, build_net_tree, partition_clusters
from .voronoi import VorDiagram, build_voronoi, key_sites, place_sites, triangulate_cells

log = logging.getLogger(__name__)


@dataclass
class TrainConfig:
    n: int
    m: int
    epsilon: float = 0.5
    tau: int = 11
    net_oversample: float = 4.0
    seed: int = 0
    allow_large_m: bool = False
    z_gate: float = 50.0
    z_check_instances: int = 20
    retries: int = 3

    def validate(self):
        if self.n < 1:
            raise ValueError("n must be positive")
        if self.m < 1:
            raise ValueError("m must be positive")
        if self.m * self.m > self.n and not self.allow_large_m:
            raise MTooLarge(f"m={self.m} is too large for n={self.n}: need m*m <= n")
        if not 0 < self.epsilon < 1:
            raise BadEpsilon(f"epsilon must lie strictly between 0 and 1, got {self.epsilon}")
        if self.tau < 11:
            raise TauTooSmall(f"tau must be at least 11, got {self.tau}")

    def to_json(self):
        return dict(self.__dict__)


@dataclass
class TrainedModel:
    gauge: ConvexGauge
    frame: BoundingFrame
    config: TrainConfig
    S: dict                 # label -> point, real sites only
    vorS: VorDiagram
    L_S: UniformLocator
    L: list                 # one WeightedLocator per input index
    freq: list              # estimated triangle frequencies per index
    tree: NetTree
    clusters: list
    division: Division
    meta: dict = field(default_factory=dict)
    vertex_tris: dict = field(default_factory=dict, repr=False)

    @property
    def n(self):
        return self.config.n

    @property
    def m(self):
        return self.config.m

    @property
    def B(self):
        return self.division.B

    @property
    def vorB(self):
        return self.division.vorB

    def root_reps(self):
        return sorted({self.tree.rep[c.root] for c in self.clusters})

    def index_triangles(self):
        """Map each vertex key of vorS to the fan triangles it is a corner of."""
        vt = {}
        for t, (_, u, v) in enumerate(self.vorS.triangles):
            vt.setdefault(u, []).append(t)
            vt.setdefault(v, []).append(t)
        self.vertex_tris = vt
        return vt

    def summary(self):
        return {"S": len(self.S), "V_S": len(self.vorS.verts),
                "triangles": len(self.vorS.triangles), "B": len(self.B),
                "regions": len(self.division.regions), "clusters": len(self.clusters),
                **self.meta}


# ---------------------------------------------------------------------------
# the individual training steps
# ---------------------------------------------------------------------------

def batch_size(n, m):
    return max(1, math.ceil(m * math.log(m * n)))


def harvest_samples(mixture: MixtureModel, n, m, rng=None):
    """Points x_j taken column by column from fresh instances.

    Index 1 is read from the first ceil(m ln(mn)) instances, index 2 from
    the next batch, and so on, so |X| = n * ceil(m ln(mn)).
    """
    rng = rng or random.Random(0)
    if mixture.n != n:
        raise ValueError(f"mixture draws {mixture.n} points, expected {n}")
    per = batch_size(n, m)
    X = []
    for i in range(n):
        for _ in range(per):
            X.append(sample_instance(mixture, rng)[i])
    return X


def net_size(eps_net, oversample=4.0):
    inv = 1.0 / eps_net
    return max(1, math.ceil(oversample * inv * math.log(inv)))


def build_eps_net(g: ConvexGauge, X, eps_net, oversample=4.0, rng=None):
    """Random sample of X large enough to be an eps-net for homothets of Q*.

    The sample has ceil(c0 (1/eps) ln(1/eps)) points, or all distinct points
    of X when that is fewer.
    """
    if not X:
        raise ValueError("cannot take a net of an empty point set")
    rng = rng or random.Random(0)
    distinct = list(dict.fromkeys((float(p[0]), float(p[1])) for p in X))
    k = net_size(eps_net, oversample)
    if k >= len(distinct):
        return distinct
    return rng.sample(distinct, k)


def estimate_frequencies(model: TrainedModel, mixture: MixtureModel, count, rng=None):
    """Per index i, the fraction of ``count`` instances whose p_i hits each triangle."""
    rng = rng or random.Random(0)
    hits = [dict() for _ in range(model.n)]
    for _ in range(count):
        inst = sample_instance(mixture, rng)
        for i, p in enumerate(inst):
            t, _ = model.L_S.locate(p)
            hits[i][t] = hits[i].get(t, 0) + 1
    return [{t: c / count for t, c in sorted(h.items())} for h in hits]


def build_LS(vorS: VorDiagram, rng=None) -> UniformLocator:
    if vorS.triangles is None:
        triangulate_cells(vorS)
    return UniformLocator(vorS, rng or random.Random(0))


def build_Li(vorS: VorDiagram, freq, floor, rng=None) -> WeightedLocator:
    return WeightedLocator(vorS, freq, floor, rng or random.Random(0))


def conflict_sizes(model: TrainedModel, inst):
    """|Z_v| per vertex of vorS for one instance, through the uniform locator."""
    from .voronoi import conflict_region
    vorS = model.vorS
    Z = {}
    for p in inst:
        t, _ = model.L_S.locate(p)
        _, u, v = vorS.triangles[t]
        seed = u if vorS.conflicts(u, p) else v
        for k in conflict_region(vorS, p, seed):
            Z[k] = Z.get(k, 0) + 1
    return Z


def z_square_ratio(model: TrainedModel, mixture: MixtureModel, instances, rng=None):
    """Mean over fresh instances of sum_v |Z_v|^2 / n."""
    rng = rng or random.Random(1)
    tot = 0.0
    for _ in range(instances):
        Z = conflict_sizes(model, sample_instance(mixture, rng))
        tot += sum(z * z for z in Z.values()) / model.n
    return tot / max(1, instances)


# ---------------------------------------------------------------------------
# the whole phase
# ---------------------------------------------------------------------------

def train(mixture: MixtureModel, n=None, m=None, epsilon=0.5, gauge: ConvexGauge = None,
          config: TrainConfig = None, frame: BoundingFrame = None, **kw) -> TrainedModel:
    """Run every training step and check the conflict-size bound afterwards.

    When the mean of sum_v |Z_v|^2 / n over a few fresh instances exceeds
    ``z_gate``, S is drawn again, at most ``retries`` times.  ``frame``
    defaults to the dummy frame of the gauge around the unit box.
    """
    if config is None:
        config = TrainConfig(n=n if n is not None else mixture.n,
                             m=m if m is not None else mixture.m, epsilon=epsilon, **kw)
    config.validate()
    if gauge is None:
        from .gauge import named_gauge
        gauge = named_gauge("square")
    n, m = config.n, config.m
    if mixture.n != n:
        raise ValueError(f"mixture draws {mixture.n} points, config says n={n}")
    frame = frame or dummy_frame(gauge)
    rng = random.Random(config.seed)
    times = {}
    t0 = time.perf_counter()
    X = harvest_samples(mixture, n, m, rng)
    times["harvest"] = time.perf_counter() - t0
    model = None
    attempts = 0
    for attempt in range(config.retries + 1):
        attempts = attempt + 1
        model = _assemble(gauge, frame, mixture, config, X, rng, times)
        t0 = time.perf_counter()
        ratio = z_square_ratio(model, mixture, config.z_check_instances,
                               random.Random(config.seed + 7919 * (attempt + 1)))
        times["z_check"] = time.perf_counter() - t0
        model.meta["z_ratio"] = ratio
        if ratio <= config.z_gate:
            break
        log.warning("conflict check %.2f above gate %.2f, redrawing S", ratio, config.z_gate)
    model.meta.update({"attempts": attempts, "times": times, "X": len(X),
                       "net_target": net_size(1.0 / (m * n), config.net_oversample),
                       "mixture": mixture.name, "mixture_spec": mixture.to_json()})
    return model


def _assemble(gauge, frame, mixture, config, X, rng, times):
    n, m, eps = config.n, config.m, config.epsilon
    t0 = time.perf_counter()
    net = build_eps_net(gauge, X, 1.0 / (m * n), config.net_oversample, rng)
    net.sort()
    times["net"] = time.perf_counter() - t0
    base = len(frame.dummies)
    S = place_sites(gauge, frame, dict(enumerate(frame.dummies)),
                    {base + i: p for i, p in enumerate(net)})
    t0 = time.perf_counter()
    vorS = triangulate_cells(build_voronoi(gauge, list(S.values()), frame,
                                           random.Random(rng.random()), labels=list(S)))
    times["vorS"] = time.perf_counter() - t0
    t0 = time.perf_counter()
    L_S = build_LS(vorS, random.Random(rng.random()))
    times["L_S"] = time.perf_counter() - t0
    model = TrainedModel(gauge, frame, config, S, vorS, L_S, [], [], None, [], None)
    model.index_triangles()
    t0 = time.perf_counter()
    count = math.ceil((m * n) ** eps)
    model.freq = estimate_frequencies(model, mixture, count, random.Random(rng.random()))
    floor = (m * n) ** (-eps)
    model.L = [build_Li(vorS, f, floor, random.Random(rng.random())) for f in model.freq]
    times["L_i"] = time.perf_counter() - t0
    t0 = time.perf_counter()
    model.tree = build_net_tree(gauge, S, config.tau)
    model.clusters = partition_clusters(model.tree, m)
    times["tree"] = time.perf_counter() - t0
    t0 = time.perf_counter()
    model.division = build_m2_division(vorS, m)
    times["division"] = time.perf_counter() - t0
    model.meta["freq_samples"] = count
    model.meta["floor"] = floor
    return model


def vertex_sites(keys):
    out = set()
    for k in keys:
        out.update(key_sites(k))
    return out


__all__ = ["TrainConfig", "TrainedModel", "harvest_samples", "build_eps_net",
           "estimate_frequencies", "build_LS", "build_Li", "build_m2_division", "train",
           "conflict_sizes", "z_square_ratio", "batch_size", "net_size"]
