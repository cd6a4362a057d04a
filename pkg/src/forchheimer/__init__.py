"""Generalized Forchheimer flow: constitutive law, solver and estimate verification."""

from .constitutive import ForchheimerLaw, eval_H, eval_K, invert_sg, verify_constitutive
from .errors import DomainError, ForchheimerError, NumericError, SolverError, ValidationError
from .exponents import ExponentTable, build_table
from .grid import Grid, ScalarField, Trajectory
from .harness import EstimateRecord, EstimateReport, evaluate_scenario, run_sweep
from .scenario import Scenario
from .solver import solve_ibvp

__all__ = [
    "DomainError",
    "EstimateRecord",
    "EstimateReport",
    "ExponentTable",
    "ForchheimerError",
    "ForchheimerLaw",
    "Grid",
    "NumericError",
    "Scenario",
    "ScalarField",
    "SolverError",
    "Trajectory",
    "ValidationError",
    "build_table",
    "eval_H",
    "eval_K",
    "evaluate_scenario",
    "invert_sg",
    "run_sweep",
    "solve_ibvp",
    "verify_constitutive",
]
