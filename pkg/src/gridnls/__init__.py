"""Ground states of doubly nonlinear Schrodinger energies on the square metric grid.

The grid energy is ``1/2 ||u'||^2 - alpha/p ||u||_p^p - beta/q sum_V |u|^q``
under a mass constraint; the package minimises it, probes the sign of its
level, extends grid states to the plane and compares them with the planar
limit problems as the grid step goes to zero.
"""
from . import periodic
from .energy import EnergyParams, GridProblem, el_residual, energy, gradient, lagrange_multiplier
from .extension import AffineExtension, planar_norms, rasterize, trace_derivative_sq
from .fields import GridField, derivative_sq, dump_field, load_field, mass, norm_r, restrict_profile
from .flow import NEGATIVE, ZERO, SolveConfig, SolveResult, minimize, sign_of_level
from .grid import Grid, GridSpec, build_grid
from .harness import (
    concavity_check, find_threshold, phase_table, planar_reference, probe_sign, sweep_epsilon,
)
from .periodic import VertexSetSpec, build_cell, materialize
from .planar import LINE, PLANE, STRIP, LimitCase, PlanarField, planar_ground_state

__version__ = "0.1.0"

__all__ = [
    "periodic", "EnergyParams", "GridProblem", "el_residual", "energy", "gradient",
    "lagrange_multiplier", "AffineExtension", "planar_norms", "rasterize", "trace_derivative_sq",
    "GridField", "derivative_sq", "dump_field", "load_field", "mass", "norm_r", "restrict_profile",
    "NEGATIVE", "ZERO", "SolveConfig", "SolveResult", "minimize", "sign_of_level",
    "Grid", "GridSpec", "build_grid", "concavity_check", "find_threshold", "phase_table",
    "planar_reference", "probe_sign", "sweep_epsilon", "VertexSetSpec", "build_cell", "materialize",
    "LINE", "PLANE", "STRIP", "LimitCase", "PlanarField", "planar_ground_state",
]
