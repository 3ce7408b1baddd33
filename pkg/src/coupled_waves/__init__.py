"""Numerical lab for two wave equations coupled through their velocities,
with damping acting on one component only."""

from .core import (
    CoefficientField,
    EnergyReport,
    Grid1D,
    InputError,
    StateVector,
    dissipation,
    energy,
    energy_report,
    graph_norm_sq,
    inner_h,
)
from .discretization import GeneratorMatrix, assemble_elliptic, assemble_generator, build_generator

__all__ = [
    "CoefficientField",
    "EnergyReport",
    "GeneratorMatrix",
    "Grid1D",
    "InputError",
    "StateVector",
    "assemble_elliptic",
    "assemble_generator",
    "build_generator",
    "dissipation",
    "energy",
    "energy_report",
    "graph_norm_sq",
    "inner_h",
]
