"""Hidden mixtures of product distributions over the unit box, plus entropy estimates."""
from __future__ import annotations

import json
import math
import random
from collections import Counter
from dataclasses import dataclass, field

from .errors import SivorError, UnknownPreset

BOX = ((0.0, 0.0), 1.0)


class BadMixture(SivorError):
    pass


@dataclass(frozen=True)
class Sampler:
    """One coordinate distribution: ``kind`` plus its parameters.

    * ``uniform``: params (x0, y0, x1, y1), a rectangle inside the box;
    * ``gaussian``: params (mx, my, sigma), redrawn until inside the box;
    * ``point``: params (x, y, jitter), a point mass with uniform jitter.
    """
    kind: str
    params: tuple

    def draw(self, rng: random.Random, box=BOX):
        (cx, cy), h = box
        if self.kind == "uniform":
            x0, y0, x1, y1 = self.params
            return (rng.uniform(x0, x1), rng.uniform(y0, y1))
        if self.kind == "gaussian":
            mx, my, sd = self.params
            for _ in range(10000):
                p = (rng.gauss(mx, sd), rng.gauss(my, sd))
                if abs(p[0] - cx) <= h and abs(p[1] - cy) <= h:
                    return p
            raise BadMixture(f"gaussian sampler {self.params} keeps missing the box")
        if self.kind == "point":
            x, y, j = self.params
            p = (x + rng.uniform(-j, j), y + rng.uniform(-j, j))
            return (min(max(p[0], cx - h), cx + h), min(max(p[1], cy - h), cy + h))
        raise BadMixture(f"unknown sampler kind {self.kind!r}")

    def to_json(self):
        return {"kind": self.kind, "params": list(self.params)}

    @staticmethod
    def from_json(obj):
        return Sampler(obj["kind"], tuple(float(x) for x in obj["params"]))


@dataclass
class MixtureModel:
    """m product distributions over n points; component a is picked with weight lam[a]."""
    components: list
    weights: list
    seed: int = 0
    lam_min: float = 0.0
    name: str = "custom"
    _rng: random.Random = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        if not self.components:
            raise BadMixture("a mixture needs at least one component")
        n = len(self.components[0])
        if any(len(c) != n for c in self.components):
            raise BadMixture("components disagree on the number of points")
        if len(self.weights) != len(self.components):
            raise BadMixture("one weight per component is required")
        total = sum(self.weights)
        if not math.isclose(total, 1.0, rel_tol=1e-9, abs_tol=1e-12):
            raise BadMixture(f"weights sum to {total}, not 1")
        for w in self.weights:
            if w < self.lam_min or w < 0:
                raise BadMixture(f"weight {w} is below the floor {self.lam_min}")
        self._rng = random.Random(self.seed)

    @property
    def n(self):
        return len(self.components[0])

    @property
    def m(self):
        return len(self.components)

    def reseed(self, seed):
        self._rng = random.Random(seed)

    def pick_component(self, rng=None):
        rng = rng or self._rng
        r = rng.random()
        acc = 0.0
        for a, w in enumerate(self.weights):
            acc += w
            if r < acc:
                return a
        return max(a for a, w in enumerate(self.weights) if w > 0)

    def to_json(self):
        return {"name": self.name, "m": self.m, "n": self.n, "weights": list(self.weights),
                "seed": self.seed, "lam_min": self.lam_min,
                "components": [[s.to_json() for s in comp] for comp in self.components]}

    @staticmethod
    def from_json(obj):
        comps = [[Sampler.from_json(s) for s in comp] for comp in obj["components"]]
        mx = MixtureModel(comps, [float(w) for w in obj["weights"]], int(obj.get("seed", 0)),
                          float(obj.get("lam_min", 0.0)), obj.get("name", "custom"))
        if "n" in obj and obj["n"] != mx.n or "m" in obj and obj["m"] != mx.m:
            raise BadMixture("declared n or m disagrees with the component lists")
        return mx

    def save(self, path):
        with open(path, "w") as fh:
            json.dump(self.to_json(), fh, indent=1)

    @staticmethod
    def load(path):
        with open(path) as fh:
            return MixtureModel.from_json(json.load(fh))


def sample_instance(mx: MixtureModel, rng=None, with_component=False):
    """One instance: a component by weight, then each point from its own sampler."""
    rng = rng or mx._rng
    a = mx.pick_component(rng)
    pts = [s.draw(rng) for s in mx.components[a]]
    return (pts, a) if with_component else pts


@dataclass(frozen=True)
class EntropyEstimate:
    bits: float
    samples: int
    stderr: float
    distinct: int


def empirical_entropy(outcomes) -> EntropyEstimate:
    """Plug-in entropy in bits with a delta-method standard error."""
    outcomes = list(outcomes)
    if not outcomes:
        raise ValueError("entropy of an empty sample")
    cnt = Counter(outcomes)
    N = len(outcomes)
    h = 0.0
    h2 = 0.0
    for c in cnt.values():
        f = c / N
        lg = math.log2(f)
        h -= f * lg
        h2 += f * lg * lg
    var = max(0.0, h2 - h * h) / N
    return EntropyEstimate(max(0.0, h), N, math.sqrt(var), len(cnt))


PRESETS = ("low_entropy", "clustered", "adversarial_uniform")


def preset_mixtures(name, n, m, seed=0, lam_floor=1.0) -> MixtureModel:
    """Benchmark mixtures with uniform weights 1/m.

    ``low_entropy``: every point a tight point mass at a fixed spot per
    component.  ``clustered``: component a owns the a-th vertical strip of
    the box and draws each point from a small gaussian around a fixed centre
    in that strip.  ``adversarial_uniform``: every point uniform on the box.
    The weight floor is lam_floor / n.
    """
    if name not in PRESETS:
        raise UnknownPreset(f"unknown preset {name!r}; choose from {', '.join(PRESETS)}")
    rng = random.Random(f"{name}:{n}:{m}:{seed}")
    comps = []
    for a in range(m):
        comp = []
        for _ in range(n):
            if name == "low_entropy":
                comp.append(Sampler("point", (rng.uniform(-0.9, 0.9), rng.uniform(-0.9, 0.9), 0.0)))
            elif name == "clustered":
                x0 = -1.0 + 2.0 * a / m
                x1 = -1.0 + 2.0 * (a + 1) / m
                w = x1 - x0
                comp.append(Sampler("gaussian", (rng.uniform(x0 + 0.2 * w, x1 - 0.2 * w),
                                                 rng.uniform(-0.9, 0.9), 0.02)))
            else:
                comp.append(Sampler("uniform", (-1.0, -1.0, 1.0, 1.0)))
        comps.append(comp)
    return MixtureModel(comps, [1.0 / m] * m, seed, lam_floor / n, name)


__all__ = ["Sampler", "MixtureModel", "sample_instance", "EntropyEstimate",
           "empirical_entropy", "preset_mixtures", "PRESETS", "BadMixture", "BOX"]
