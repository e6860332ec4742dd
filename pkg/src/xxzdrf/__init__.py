"""Threshold singularities of dynamic response functions in the massless XXZ chain."""
from .observables import ModelParams, Observables, solve_core
from .momentum import MomentumMap
from .velocity import VelocityAtlas, build_atlas
from .excitations import ExcitationConfig, edge_exponents, shift_function

__version__ = "0.1.0"
__all__ = ["ModelParams", "Observables", "solve_core", "MomentumMap", "VelocityAtlas", "build_atlas",
           "ExcitationConfig", "edge_exponents", "shift_function"]
