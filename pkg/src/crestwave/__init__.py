"""crestwave: pseudo-spectral free-surface Euler dynamics in conformal
boundary coordinates, with energy monitors, scaling checks, crest-rigidity
tracking and a pinch-off experiment."""

from .spectral import Field, Grid, Multiplier, apply_multiplier, bracket, norm
from .model import WaveState, DerivedFields, derive, rhs
from .stepper import StepControl, rk4_step, evolve

__all__ = [
    "Field", "Grid", "Multiplier", "apply_multiplier", "bracket", "norm",
    "WaveState", "DerivedFields", "derive", "rhs",
    "StepControl", "rk4_step", "evolve",
]

__version__ = "0.1.0"
