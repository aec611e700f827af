"""Entropy-stable and Hamiltonian schemes for the 1D Euler-Korteweg equations."""
from .errors import DomainError, InsufficientViscosityError, NewtonError, PositivityError
from .model import ConservedState, FluidModel, liu_gollub_model, shallow_water_model

__version__ = "0.1.0"

__all__ = [
    "ConservedState",
    "DomainError",
    "FluidModel",
    "InsufficientViscosityError",
    "NewtonError",
    "PositivityError",
    "liu_gollub_model",
    "shallow_water_model",
]
