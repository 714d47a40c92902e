"""Design-space exploration for a lunar navigation satellite constellation."""
from .astro import DEFAULT_CONSTANTS, CartesianState, Epoch, KeplerianElements, PhysicalConstants
from .cost import CostBreakdown, CostConfig, cost_objective
from .coverage import CoverageConfig, CoverageResult, evaluate_coverage, gdop, gdop_map, surface_grid
from .decoder import ConstellationDesign, DecisionBounds, DecisionVector, decode, walker_delta
from .forces import ForceModelConfig
from .frozen import frozen_inclination
from .pareto import hypervolume, nondominated, pareto_rank
from .problem import Evaluation, LunarProblem, ProblemSettings, evaluate_design, evaluate_vector
from .propagator import IntegratorConfig, propagate
from .stationkeeping import DeadbandConfig, annual_delta_v

__version__ = "0.1.0"

__all__ = [
    "DEFAULT_CONSTANTS", "CartesianState", "Epoch", "KeplerianElements", "PhysicalConstants",
    "CostBreakdown", "CostConfig", "cost_objective",
    "CoverageConfig", "CoverageResult", "evaluate_coverage", "gdop", "gdop_map", "surface_grid",
    "ConstellationDesign", "DecisionBounds", "DecisionVector", "decode", "walker_delta",
    "ForceModelConfig", "frozen_inclination", "hypervolume", "nondominated", "pareto_rank",
    "Evaluation", "LunarProblem", "ProblemSettings", "evaluate_design", "evaluate_vector",
    "IntegratorConfig", "propagate", "DeadbandConfig", "annual_delta_v",
]
