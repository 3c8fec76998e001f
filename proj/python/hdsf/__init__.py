"""Property-scoped surrogate simulation and falsification of a drone parachute controller."""

from ._core import Error, condense, conformance, evaluate, fuzz, run

__all__ = ["Error", "condense", "conformance", "evaluate", "fuzz", "run"]
