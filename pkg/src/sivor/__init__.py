"""Self-improving Voronoi diagrams under convex polygon gauges.

Training learns a typical site set S from sample instances; afterwards
``run`` builds the diagram of a fresh instance through S.
"""
__version__ = "0.1.0"

from .errors import SivorError
from .gauge import BoundingFrame, ConvexGauge, dummy_frame, make_gauge, named_gauge
from .io import load_model, save_model
from .kernels import COMPILED
from .mixture import MixtureModel, empirical_entropy, preset_mixtures, sample_instance
from .operator import OperationStats, certify_entropy, run
from .trainer import TrainConfig, TrainedModel, train
from .voronoi import VorDiagram, brute_force_voronoi, build_voronoi, combinatorial_equal

__all__ = ["__version__", "SivorError", "BoundingFrame", "ConvexGauge", "dummy_frame",
           "make_gauge", "named_gauge", "load_model", "save_model", "COMPILED",
           "MixtureModel", "empirical_entropy", "preset_mixtures", "sample_instance",
           "OperationStats", "certify_entropy", "run", "TrainConfig", "TrainedModel", "train",
           "VorDiagram", "brute_force_voronoi", "build_voronoi", "combinatorial_equal"]
