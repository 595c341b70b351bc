"""Real-coded NSGA-II machinery with feasibility-first constrained dominance.

Objectives are (cost, resilience): cost is minimized, resilience maximized.
Populations are held as arrays; :class:`Individual` is the per-solution view.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .objectives import Evaluation


@dataclass
class OperatorParams:
    p_c: float = 0.9
    eta_c: float = 15.0
    p_m: float | None = None  # None means 1 / n_real
    eta_m: float = 7.0

    def __post_init__(self):
        if not 0.0 <= self.p_c <= 1.0:
            raise ValueError("p_c must lie in [0, 1]")
        if self.p_m is not None and not 0.0 <= self.p_m <= 1.0:
            raise ValueError("p_m must lie in [0, 1]")
        if self.eta_c <= 0 or self.eta_m <= 0:
            raise ValueError("distribution indices must be positive")

    def mutation_rate(self, n_real: int) -> float:
        return self.p_m if self.p_m is not None else 1.0 / max(n_real, 1)


@dataclass
class Individual:
    design: np.ndarray
    eval: Evaluation
    rank: int = -1
    crowding: float = 0.0


def dominates(a: Individual | Evaluation, b: Individual | Evaluation) -> bool:
    ea = a.eval if isinstance(a, Individual) else a
    eb = b.eval if isinstance(b, Individual) else b
    if ea.feasible != eb.feasible:
        return ea.feasible
    if not ea.feasible:
        return ea.total_head_deficit < eb.total_head_deficit
    no_worse = ea.cost <= eb.cost and ea.resilience >= eb.resilience
    better = ea.cost < eb.cost or ea.resilience > eb.resilience
    return no_worse and better


class Population:
    """Genomes with their evaluations, plus rank/crowding once sorted."""

    def __init__(self, genes, evals: Sequence[Evaluation], rank=None, crowding=None, _arrays=None):
        self.genes = np.atleast_2d(np.asarray(genes, dtype=float))
        self.evals = list(evals)
        n = len(self.evals)
        if _arrays is None:
            _arrays = (
                np.array([e.cost for e in self.evals], dtype=float),
                np.array([e.resilience for e in self.evals], dtype=float),
                np.array([e.feasible for e in self.evals], dtype=bool),
                np.array([e.total_head_deficit for e in self.evals], dtype=float),
            )
        self.cost, self.res, self.feasible, self.deficit = _arrays
        self.rank = np.full(n, -1, dtype=int) if rank is None else np.asarray(rank, dtype=int)
        self.crowding = np.zeros(n) if crowding is None else np.asarray(crowding, dtype=float)

    def __len__(self) -> int:
        return len(self.evals)

    def take(self, idx: Sequence[int]) -> "Population":
        idx = np.asarray(idx, dtype=int)
        arrays = (self.cost[idx], self.res[idx], self.feasible[idx], self.deficit[idx])
        return Population(
            self.genes[idx], [self.evals[i] for i in idx], self.rank[idx], self.crowding[idx], arrays
        )

    @classmethod
    def concat(cls, a: "Population", b: "Population") -> "Population":
        arrays = tuple(
            np.concatenate([x, y])
            for x, y in zip((a.cost, a.res, a.feasible, a.deficit), (b.cost, b.res, b.feasible, b.deficit))
        )
        return cls(np.vstack([a.genes, b.genes]), a.evals + b.evals, _arrays=arrays)

    @classmethod
    def from_individuals(cls, pop: Sequence[Individual]) -> "Population":
        return cls(
            np.array([ind.design for ind in pop]),
            [ind.eval for ind in pop],
            np.array([ind.rank for ind in pop]),
            np.array([ind.crowding for ind in pop], dtype=float),
        )

    def individuals(self) -> list[Individual]:
        return [
            Individual(self.genes[i].copy(), self.evals[i], int(self.rank[i]), float(self.crowding[i]))
            for i in range(len(self))
        ]

    def objective_matrix(self) -> np.ndarray:
        """(cost, resilience) with non-finite entries zeroed, for crowding."""
        f = np.column_stack([self.cost, self.res])
        return np.where(np.isfinite(f), f, 0.0)

    def dominance_matrix(self) -> np.ndarray:
        return dominance_matrix(self.cost, self.res, self.feasible, self.deficit)


def dominance_matrix(cost, res, feasible, deficit) -> np.ndarray:
    """``D[i, j]`` is True when solution i constrained-dominates solution j."""
    c, r = cost[:, None], res[:, None]
    le_c, ge_r = c <= cost, r >= res
    pareto = le_c & ge_r & ~(le_c.T & ge_r.T)
    if feasible.all():
        return pareto
    fi, fj = feasible[:, None], feasible[None, :]
    infeasible_pair = ~fi & ~fj
    return (fi & fj & pareto) | (fi & ~fj) | (infeasible_pair & (deficit[:, None] < deficit[None, :]))


def sort_fronts(dom: np.ndarray) -> list[np.ndarray]:
    """Peel non-dominated fronts off a dominance matrix."""
    n = dom.shape[0]
    counts = dom.sum(axis=0)
    remaining = np.ones(n, dtype=bool)
    fronts = []
    while remaining.any():
        front = np.flatnonzero(remaining & (counts == 0))
        fronts.append(front)
        remaining[front] = False
        counts = counts - dom[front].sum(axis=0)
    return fronts


def fast_nondominated_sort(pop: Sequence[Individual] | Population) -> list[list[int]]:
    """Fronts as lists of positions into ``pop``; also stores ranks on ``pop``."""
    p = pop if isinstance(pop, Population) else Population.from_individuals(pop)
    fronts = sort_fronts(p.dominance_matrix())
    for rank, front in enumerate(fronts):
        p.rank[front] = rank
        if not isinstance(pop, Population):
            for i in front:
                pop[i].rank = rank
    return [f.tolist() for f in fronts]


def crowding_of(f: np.ndarray) -> np.ndarray:
    """Crowding distance of each row of an objective matrix (one front)."""
    n, m = f.shape
    if n <= 2:
        return np.full(n, np.inf)
    d = np.zeros(n)
    for k in range(m):
        order = np.argsort(f[:, k], kind="stable")
        col = f[order, k]
        span = col[-1] - col[0]
        if span > 0:
            d[order[1:-1]] += (col[2:] - col[:-2]) / span
        d[order[0]] = d[order[-1]] = np.inf
    return d


def crowding_distance(front: Sequence[Individual]) -> list[float]:
    f = Population.from_individuals(front).objective_matrix()
    d = crowding_of(f)
    for ind, value in zip(front, d):
        ind.crowding = float(value)
    return d.tolist()


def assign_rank_and_crowding(pop: Population) -> list[np.ndarray]:
    fronts = sort_fronts(pop.dominance_matrix())
    f = pop.objective_matrix()
    for rank, front in enumerate(fronts):
        pop.rank[front] = rank
        pop.crowding[front] = crowding_of(f[front])
    return fronts


# -- variation operators --------------------------------------------------------


def sbx_beta(u, eta: float):
    """Spread factor from the SBX inverse CDF."""
    u = np.asarray(u, dtype=float)
    with np.errstate(divide="ignore"):
        return np.where(
            u <= 0.5,
            (2.0 * u) ** (1.0 / (eta + 1.0)),
            (1.0 / (2.0 * (1.0 - u))) ** (1.0 / (eta + 1.0)),
        )


def sbx_crossover(p1, p2, params: OperatorParams, rng, upper=None):
    """Simulated binary crossover; works on single vectors or stacked pairs.

    Each pair crosses with probability ``p_c``, each gene of a crossing pair
    with probability 0.5. Children are clipped to ``[0, upper]``.
    """
    p1 = np.asarray(p1, dtype=float)
    p2 = np.asarray(p2, dtype=float)
    a, b = np.atleast_2d(p1), np.atleast_2d(p2)
    n_pairs, n = a.shape
    pair_draw = rng.random(n_pairs)
    gene_draw = rng.random((n_pairs, n))
    u = rng.random((n_pairs, n))
    mask = (pair_draw < params.p_c)[:, None] & (gene_draw < 0.5) & (np.abs(a - b) > 1e-14)
    beta = sbx_beta(u, params.eta_c)
    c1 = np.where(mask, 0.5 * ((1 + beta) * a + (1 - beta) * b), a)
    c2 = np.where(mask, 0.5 * ((1 - beta) * a + (1 + beta) * b), b)
    if upper is not None:
        upper = np.asarray(upper, dtype=float)
        c1 = np.clip(c1, 0.0, upper)
        c2 = np.clip(c2, 0.0, upper)
    if p1.ndim == 1:
        return c1[0], c2[0]
    return c1, c2


def polynomial_delta(u, y, upper, eta: float):
    """Bounded polynomial-mutation displacement, in gene units."""
    u = np.asarray(u, dtype=float)
    span = np.asarray(upper, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        d1 = np.where(span > 0, y / span, 0.0)
        d2 = np.where(span > 0, (span - y) / span, 0.0)
    mpow = 1.0 / (eta + 1.0)
    lo = 2.0 * u + (1.0 - 2.0 * u) * (1.0 - d1) ** (eta + 1.0)
    hi = 2.0 * (1.0 - u) + 2.0 * (u - 0.5) * (1.0 - d2) ** (eta + 1.0)
    dq = np.where(u < 0.5, np.abs(lo) ** mpow - 1.0, 1.0 - np.abs(hi) ** mpow)
    return dq * span


def polynomial_mutation(d, params: OperatorParams, rng, upper):
    """Mutate each gene with probability ``p_m`` (default 1/n); stays in bounds."""
    x = np.asarray(d, dtype=float)
    upper = np.broadcast_to(np.asarray(upper, dtype=float), x.shape)
    p_m = params.mutation_rate(x.shape[-1])
    hit = rng.random(x.shape) < p_m
    u = rng.random(x.shape)
    y = x + np.where(hit, polynomial_delta(u, x, upper, params.eta_m), 0.0)
    return np.clip(y, 0.0, upper)


def tournament(rank: np.ndarray, crowding: np.ndarray, rng, n: int) -> np.ndarray:
    """``n`` binary tournaments: lower rank, then larger crowding, then a coin."""
    size = rank.shape[0]
    a = rng.integers(0, size, n)
    b = rng.integers(0, size, n)
    coin = rng.random(n) < 0.5
    ra, rb = rank[a], rank[b]
    ca, cb = crowding[a], crowding[b]
    a_wins = (ra < rb) | ((ra == rb) & ((ca > cb) | ((ca == cb) & coin)))
    return np.where(a_wins, a, b)


def make_children(pop: Population, params: OperatorParams, rng, upper) -> np.ndarray:
    """Child genomes (same count as ``pop``) via tournament, SBX and mutation."""
    n = len(pop)
    winners = tournament(pop.rank, pop.crowding, rng, n + (n % 2))
    parents = pop.genes[winners]
    c1, c2 = sbx_crossover(parents[0::2], parents[1::2], params, rng, upper)
    children = np.empty_like(parents)
    children[0::2], children[1::2] = c1, c2
    return polynomial_mutation(children[:n], params, rng, upper)


def environmental_selection(combined: Population, n: int) -> np.ndarray:
    """Indices into ``combined`` of the next population; updates rank/crowding."""
    fronts = assign_rank_and_crowding(combined)
    chosen = []
    for front in fronts:
        if len(chosen) + len(front) <= n:
            chosen.extend(front.tolist())
            if len(chosen) == n:
                break
            continue
        order = np.argsort(-combined.crowding[front], kind="stable")
        chosen.extend(front[order[: n - len(chosen)]].tolist())
        break
    return np.asarray(chosen, dtype=int)
