"""Model files: one JSON header line followed by zlib-compressed JSON blobs.

The header carries the format version, the package version, the training
config, the gauge, the frame and a table of blobs (name, byte length,
crc32).  Every blob is canonical JSON (sorted keys, no spaces), so saving
the same model twice gives the same bytes.  Structures that are pure
functions of stored data (clusters, fan triangles, the per-region search
aids, the distance matrix of the net-tree) are rebuilt on load.
"""
from __future__ import annotations

import json
import zlib

from .division import Division, Region, rebuild_region_aids
from .gauge import BoundingFrame, make_gauge
from .locate import UniformLocator, WeightedLocator
from .nettree import NEG_INF, NetTree, metric_matrix, partition_clusters
from .trainer import TrainConfig, TrainedModel
from .voronoi import Vertex, VorDiagram, triangulate_cells

MAGIC = b"SIVOR-MODEL\n"
FORMAT_VERSION = 1
_BLOBS = ("S", "vorS", "L_S", "L", "freq", "tree", "division", "meta")


class ModelFormatError(ValueError):
    pass


def _canon(obj) -> bytes:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), allow_nan=False).encode()


def _key(k):
    return tuple(k)


# -- diagrams ---------------------------------------------------------------

def diagram_state(d: VorDiagram):
    # lists, not dicts, so site and cycle order survive the round trip
    return {
        "points": [[s, p[0], p[1]] for s, p in d.points.items()],
        "verts": sorted([list(k), v.x, v.y, v.lam, v.dx, v.dy] for k, v in d.verts.items()),
        "cycles": [[s, [list(k) for k in cyc]] for s, cyc in d.cycles.items()],
        "dummies": list(d.dummies),
        "aliases": sorted([a, b] for a, b in d.aliases.items()),
    }


def diagram_from_state(st, g, frame) -> VorDiagram:
    points = {int(s): (x, y) for s, x, y in st["points"]}
    verts = {}
    for k, x, y, lam, dx, dy in st["verts"]:
        k = _key(k)
        verts[k] = Vertex(k, x, y, lam, dx, dy)
    cycles = {int(s): [_key(k) for k in cyc] for s, cyc in st["cycles"]}
    d = VorDiagram(g, frame, points, verts, cycles, st["dummies"])
    d.aliases = {int(a): int(b) for a, b in st["aliases"]}
    return triangulate_cells(d)


# -- the tree ---------------------------------------------------------------

def _tree_state(t: NetTree):
    return {
        "points": [[s, p[0], p[1]] for s, p in t.points.items()],
        "root": t.root,
        "kids": sorted([u, list(ch)] for u, ch in t.kids.items()),
        "lev": [None if lv == NEG_INF else lv for lv in t.lev],
        "rep": list(t.rep),
        "leaves": sorted([u, lab] for u, lab in t.leaf_label.items()),
        "tau": t.tau,
    }


def _tree_from_state(st, g) -> NetTree:
    points = {int(s): (x, y) for s, x, y in st["points"]}
    lev = [NEG_INF if lv is None else lv for lv in st["lev"]]
    t = NetTree(points, st["root"], {u: tuple(ch) for u, ch in st["kids"]}, lev,
                list(st["rep"]), {u: lab for u, lab in st["leaves"]}, st["tau"])
    if len(points) > 1:
        labels = list(points)
        t.matrix = (labels, metric_matrix(g, [points[s] for s in labels]))
    return t


# -- the division -----------------------------------------------------------

def _division_state(dv: Division):
    return {
        "regions": [{"index": r.index, "sites": list(r.sites),
                     "vertices": sorted(list(k) for k in r.vertices),
                     "boundary": [list(k) for k in r.boundary],
                     "triangles": list(r.triangles)} for r in dv.regions],
        "B": list(dv.B),
        "vorB": diagram_state(dv.vorB),
        "region_of_vertex": sorted([list(k), i] for k, i in dv.region_of_vertex.items()),
        "m": dv.m,
    }


def _division_from_state(st, vorS: VorDiagram) -> Division:
    regions = []
    region_of_site = {}
    for r in st["regions"]:
        reg = Region(r["index"], list(r["sites"]), {_key(k) for k in r["vertices"]},
                     [_key(k) for k in r["boundary"]], list(r["triangles"]))
        regions.append(reg)
        for s in reg.sites:
            region_of_site[s] = reg.index
    rebuild_region_aids(vorS, regions)
    vorB = diagram_from_state(st["vorB"], vorS.gauge, vorS.frame)
    in_VS = {k: k in vorS.verts for k in vorB.verts}
    rov = {_key(k): i for k, i in st["region_of_vertex"]}
    return Division(regions, region_of_site, list(st["B"]), vorB, in_VS, rov, st["m"])


# -- whole models -----------------------------------------------------------

def _persisted_meta(meta):
    # wall times differ between runs; they go to the training report instead
    return {k: v for k, v in meta.items() if k != "times"}


def model_bytes(model: TrainedModel) -> bytes:
    from . import __version__
    blobs = {
        "S": [[s, p[0], p[1]] for s, p in model.S.items()],
        "vorS": diagram_state(model.vorS),
        "L_S": model.L_S.to_state(),
        "L": [loc.to_state() for loc in model.L],
        "freq": [sorted([t, f] for t, f in fr.items()) for fr in model.freq],
        "tree": _tree_state(model.tree),
        "division": _division_state(model.division),
        "meta": _persisted_meta(model.meta),
    }
    packed = [(name, zlib.compress(_canon(blobs[name]), 9)) for name in _BLOBS]
    header = {
        "format": FORMAT_VERSION,
        "version": __version__,
        "config": model.config.to_json(),
        "gauge": [list(v) for v in model.gauge.vertices_Q],
        "frame": model.frame.to_json(),
        "blobs": [{"name": n, "size": len(b), "crc32": zlib.crc32(b)} for n, b in packed],
    }
    return MAGIC + _canon(header) + b"\n" + b"".join(b for _, b in packed)


def model_from_bytes(data: bytes) -> TrainedModel:
    if not data.startswith(MAGIC):
        raise ModelFormatError("not a model file (bad magic)")
    end = data.index(b"\n", len(MAGIC))
    header = json.loads(data[len(MAGIC):end])
    if header.get("format") != FORMAT_VERSION:
        raise ModelFormatError(f"unsupported model format {header.get('format')!r}")
    pos = end + 1
    blobs = {}
    for entry in header["blobs"]:
        raw = data[pos:pos + entry["size"]]
        pos += entry["size"]
        if len(raw) != entry["size"] or zlib.crc32(raw) != entry["crc32"]:
            raise ModelFormatError(f"blob {entry['name']!r} is truncated or corrupt")
        blobs[entry["name"]] = json.loads(zlib.decompress(raw))
    if pos != len(data):
        raise ModelFormatError("trailing bytes after the last blob")
    g = make_gauge([tuple(v) for v in header["gauge"]])
    frame = BoundingFrame.from_json(header["frame"])
    config = TrainConfig(**header["config"])
    vorS = diagram_from_state(blobs["vorS"], g, frame)
    S = {int(s): (x, y) for s, x, y in blobs["S"]}
    freq = [{int(t): f for t, f in fr} for fr in blobs["freq"]]
    tree = _tree_from_state(blobs["tree"], g)
    model = TrainedModel(g, frame, config, S, vorS, UniformLocator.from_state(blobs["L_S"]),
                         [WeightedLocator.from_state(st) for st in blobs["L"]], freq, tree,
                         partition_clusters(tree, config.m),
                         _division_from_state(blobs["division"], vorS), dict(blobs["meta"]))
    model.index_triangles()
    return model


def save_model(model: TrainedModel, path):
    data = model_bytes(model)
    with open(path, "wb") as fh:
        fh.write(data)
    return len(data)


def load_model(path) -> TrainedModel:
    with open(path, "rb") as fh:
        return model_from_bytes(fh.read())


__all__ = ["save_model", "load_model", "model_bytes", "model_from_bytes", "diagram_state",
           "diagram_from_state", "ModelFormatError", "FORMAT_VERSION"]
