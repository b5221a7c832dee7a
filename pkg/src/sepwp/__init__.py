"""Sampled analysis of Levitin-Polyak well-posedness by perturbations for split equilibrium problems."""

from .analysis import (
    ApproxSolutionSet,
    Classification,
    SamplingPlan,
    SweepResult,
    classify,
    compute_S_eps,
    membership,
    solution_floor,
    sweep,
)
from .expr import Expression, ParseError, evaluate, free_vars, parse
from .geometry import Box
from .problem import PerturbedSEP, Residual, residual
from .sequences import SequenceStep, convergence_profile, generate, verify

__version__ = "0.1.0"

__all__ = [
    "ApproxSolutionSet",
    "Box",
    "Classification",
    "Expression",
    "ParseError",
    "PerturbedSEP",
    "Residual",
    "SamplingPlan",
    "SequenceStep",
    "SweepResult",
    "classify",
    "compute_S_eps",
    "convergence_profile",
    "evaluate",
    "free_vars",
    "generate",
    "membership",
    "parse",
    "residual",
    "solution_floor",
    "sweep",
    "verify",
]
