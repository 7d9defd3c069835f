"""Newton, Newton-Anderson(m) and accelerated-Newton solvers for nonlinear
systems, with a benchmark harness and domain-of-convergence sweeps."""
from .dofc import DofcRaster, DofcSpec, sweep
from .harness import SolveReport, Status, Termination, solve, timed_solve
from .problems import Problem, get_problem, list_problems
from .solvers import MethodSpec, psi_alpha

__all__ = [
    "DofcRaster",
    "DofcSpec",
    "MethodSpec",
    "Problem",
    "SolveReport",
    "Status",
    "Termination",
    "get_problem",
    "list_problems",
    "psi_alpha",
    "solve",
    "sweep",
    "timed_solve",
]
