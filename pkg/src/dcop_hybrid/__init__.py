"""Hybrid DCOP solving: non-iterative initializers chained into local search."""
from .engine import Counters, Message, MsgKind, RunRecord, StopPolicy
from .estimator import HybridSolver
from .experiments import ExperimentConfig, run_campaign, run_hybrid
from .initializers import random_init
from .model import (
    Assignment,
    Constraint,
    ProblemInstance,
    best_response,
    global_cost,
    local_cost,
)
from .problems import GeneratorConfig, find_bridges, generate
from .solvers import SolverParams

__version__ = "0.1.0"

__all__ = [
    "Assignment",
    "Constraint",
    "Counters",
    "ExperimentConfig",
    "GeneratorConfig",
    "HybridSolver",
    "Message",
    "MsgKind",
    "ProblemInstance",
    "RunRecord",
    "SolverParams",
    "StopPolicy",
    "best_response",
    "find_bridges",
    "generate",
    "global_cost",
    "local_cost",
    "random_init",
    "run_campaign",
    "run_hybrid",
]
