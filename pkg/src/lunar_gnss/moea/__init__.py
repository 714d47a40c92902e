"""Auto-adaptive epsilon-dominance multi-objective search."""
from .archive import ACCEPTED, REJECTED, REPLACED, Archive, InsertResult, Solution, epsilon_box, operator_credits
from .engine import Borg, MOEAConfig, Problem, RunResult, run
from .operators import OPERATORS, OperatorParams, select_operator, selection_probabilities, variate
from .problems import DTLZ2

__all__ = [
    "ACCEPTED", "REJECTED", "REPLACED", "Archive", "InsertResult", "Solution", "epsilon_box", "operator_credits",
    "Borg", "MOEAConfig", "Problem", "RunResult", "run",
    "OPERATORS", "OperatorParams", "select_operator", "selection_probabilities", "variate", "DTLZ2",
]
