"""Thermal explosion of a gas reacting in pipe flow: steady criticality and safe reactor length."""

from .errors import InvalidInputError, SolverError, ThermxError
from .model import FlowRegime, GasSpec, Laminar, PipeProblem, Turbulent

__version__ = "0.1.0"

__all__ = [
    "FlowRegime",
    "GasSpec",
    "InvalidInputError",
    "Laminar",
    "PipeProblem",
    "SolverError",
    "ThermxError",
    "Turbulent",
    "__version__",
]
