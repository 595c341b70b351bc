"""NSGA-II with an external hypergrid archive, local search and archive
coupling, for two-objective (cost, resilience) water network design."""

__version__ = "0.1.0"

from .archive import HypergridArchive, InsertResult, Solution, nondominated
from .hydraulics import HydraulicState, headloss_hw, solve_steady_state
from .metrics import ComparisonReport, compare_fronts, export_front, hypervolume_2d
from .network import (
    DesignVector,
    NetworkConfig,
    OptionTable,
    PipeNetwork,
    load_config,
    load_network,
    parse_cost_table,
    parse_inp,
    round_to_indices,
    serialize_inp,
)
from .nsga2 import OperatorParams, dominates, fast_nondominated_sort
from .objectives import Evaluation, Evaluator, cost, evaluate, resilience
from .orchestrator import RunConfig, run_all, run_single
