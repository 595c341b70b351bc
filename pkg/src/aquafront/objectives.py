"""Cost, network resilience and feasibility of a design."""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DegenerateDenominator, Disconnected
from .hydraulics import GRAVITY, RHO, HydraulicState, solve_steady_state, topology
from .network import DesignVector, PipeNetwork, round_genes

INFEASIBLE_DEFICIT = math.inf
UNKNOWN_RESILIENCE = -math.inf


@dataclass(frozen=True)
class Evaluation:
    cost: float
    resilience: float
    feasible: bool
    total_head_deficit: float
    fe_count: int = 1

    @property
    def objectives(self) -> tuple[float, float]:
        return (self.cost, self.resilience)


def cost(net: PipeNetwork, indices: Sequence[int]) -> float:
    """Sum of unit cost times length over all pipes."""
    return float(np.dot(net.unit_costs(indices), net.pipe_lengths))


def uniformity(net: PipeNetwork, diameters: np.ndarray) -> np.ndarray:
    """Per-junction diameter uniformity over incident realized pipes.

    ``sum(D) / (n * max(D))``; zero for a junction with no realized pipe.
    """
    topo = topology(net)
    inc = np.abs(topo.B[: topo.n_pipes]) * (diameters > 0)[:, None]
    n = inc.sum(axis=0)
    total = inc.T @ diameters
    dmax = (inc * diameters[:, None]).max(axis=0, initial=0.0)
    with np.errstate(invalid="ignore", divide="ignore"):
        return np.where(n > 0, total / (n * dmax), 0.0)


def resilience(net: PipeNetwork, indices: Sequence[int], state: HydraulicState) -> float:
    """Network resilience index (uniformity-weighted surplus power ratio)."""
    topo = topology(net)
    q = topo.demand
    h = state.junction_heads
    h_req = np.array([j.required_head for j in net.junctions])
    c = uniformity(net, state.diameters)
    demand_nodes = q > 0
    surplus = float(np.sum((c * q * (h - h_req))[demand_nodes]))
    supplied = float(np.dot(state.reservoir_outflows, topo.res_head)) + float(topo.pump_coef.sum())
    denom = supplied - float(np.dot(q, h_req))
    if not denom > 0:
        raise DegenerateDenominator(f"available surplus power {denom} is not positive")
    return surplus / denom


def head_deficit(net: PipeNetwork, state: HydraulicState) -> float:
    h_req = np.array([j.required_head for j in net.junctions])
    return float(np.maximum(h_req - state.junction_heads, 0.0).sum())


def evaluate_indices(net: PipeNetwork, indices: Sequence[int]) -> Evaluation:
    c = cost(net, indices)
    try:
        state = solve_steady_state(net, indices)
    except Disconnected:
        return Evaluation(c, UNKNOWN_RESILIENCE, False, INFEASIBLE_DEFICIT)
    if not state.converged:
        return Evaluation(c, UNKNOWN_RESILIENCE, False, INFEASIBLE_DEFICIT)
    deficit = head_deficit(net, state)
    try:
        res = resilience(net, indices, state)
    except DegenerateDenominator:
        return Evaluation(c, UNKNOWN_RESILIENCE, False, INFEASIBLE_DEFICIT)
    return Evaluation(c, res, deficit == 0.0, deficit)


def evaluate(net: PipeNetwork, d: DesignVector) -> Evaluation:
    return evaluate_indices(net, round_genes(d.genes, d.upper))


class Evaluator:
    """Counts function evaluations for one network.

    ``cache`` memoizes evaluations by index vector; a cache hit still counts
    as a function evaluation, so accounting never depends on caching.
    """

    def __init__(self, net: PipeNetwork, cache: dict | None = None):
        self.net = net
        self.cache = cache
        self.count = 0
        self._lock = threading.Lock()

    def __call__(self, indices: Sequence[int]) -> Evaluation:
        key = indices if type(indices) is tuple else tuple(int(i) for i in indices)
        with self._lock:
            self.count += 1
        if self.cache is not None:
            hit = self.cache.get(key)
            if hit is not None:
                return hit
        ev = evaluate_indices(self.net, key)
        if self.cache is not None:
            self.cache[key] = ev
        return ev

    def many(self, index_rows: np.ndarray) -> list[Evaluation]:
        return [self(row) for row in np.asarray(index_rows).tolist()]
