"""Selects the compiled kernels when available, else the pure-Python ones.

Set SIVOR_PURE=1 to force the pure-Python path.
"""
import os

from ._kernels_py import (ALWAYS, LOWER, NEVER, UPPER, Bisector, Degeneracy,
                          Uncertain)
from ._kernels_py import GaugeCore as PyGaugeCore

COMPILED = False
FastGaugeCore = PyGaugeCore

if os.environ.get("SIVOR_PURE", "") not in ("1", "true", "yes"):
    try:
        from ._kernels import GaugeCore as FastGaugeCore  # noqa: F811
        COMPILED = True
    except ImportError:
        pass

__all__ = ["ALWAYS", "LOWER", "NEVER", "UPPER", "Bisector", "Degeneracy",
           "Uncertain", "PyGaugeCore", "FastGaugeCore", "COMPILED"]
