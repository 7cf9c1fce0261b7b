"""Cahn-Hilliard solver with gradient coefficient ``a(u) = 2 / (1 - u^2)`` and logarithmic potential."""
from .grid_ops import Grid, SolverError
from .model import ModelParams
from .stepper import SimState, StepperConfig, run, step

__version__ = "0.1.0"

__all__ = ["Grid", "ModelParams", "SimState", "SolverError", "StepperConfig", "run", "step"]
