"""Run schemes A-D: plain NSGA-II, + archive, + local search, + archive coupling."""

from __future__ import annotations

import logging
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Callable

import numpy as np

from .archive import HypergridArchive, Solution, nondominated
from .errors import ConfigInvalid
from .local_search import local_search_pass
from .network import PipeNetwork, round_genes
from .nsga2 import OperatorParams, Population, assign_rank_and_crowding, environmental_selection, make_children
from .objectives import Evaluator, cost

log = logging.getLogger(__name__)

SCHEMES = ("A", "B", "C", "D")

PRESETS = {
    "HAN": {"pop_size": 200, "n_gen": 10_000, "n_runs": 30, "n_link": 100},
    "BLA": {"pop_size": 200, "n_gen": 15_000, "n_runs": 20, "n_link": 100},
    "NYT": {"pop_size": 200, "n_gen": 15_000, "n_runs": 30, "n_link": 100},
    "GOY": {"pop_size": 200, "n_gen": 15_000, "n_runs": 30, "n_link": 100},
}


@dataclass
class RunConfig:
    scheme: str = "A"
    pop_size: int = 200
    n_gen: int = 10_000
    n_runs: int = 30
    operators: OperatorParams = field(default_factory=OperatorParams)
    n_link: int = 100
    ls_start: int = 1000
    ls_dense_until: int = 5000
    ls_dense_period: int = 100
    ls_sparse_period: int = 1000
    ls_sample: float = 1.0
    coupling_start: int = 1000
    cell_widths: tuple[float, float] | None = None
    max_occupancy: int = 64
    seed: int = 0

    def validate(self) -> "RunConfig":
        problems = []
        if self.scheme not in SCHEMES:
            problems.append(f"scheme must be one of {', '.join(SCHEMES)}")
        if self.pop_size < 2 or self.pop_size % 2:
            problems.append("population size must be even and at least 2")
        if self.n_gen < 0:
            problems.append("n_gen must be non-negative")
        if self.n_runs < 1:
            problems.append("n_runs must be at least 1")
        if self.n_link < 1:
            problems.append("n_link must be at least 1")
        if self.ls_dense_period < 1 or self.ls_sparse_period < 1:
            problems.append("local-search periods must be at least 1")
        if not 0.0 < self.ls_sample <= 1.0:
            problems.append("ls_sample must lie in (0, 1]")
        if self.max_occupancy < 1:
            problems.append("max_occupancy must be at least 1")
        if self.cell_widths is not None and (len(self.cell_widths) != 2 or min(self.cell_widths) <= 0):
            problems.append("cell widths must be two positive numbers")
        if problems:
            raise ConfigInvalid("; ".join(problems))
        return self

    def is_ls_generation(self, g: int) -> bool:
        if self.scheme not in ("C", "D") or g < self.ls_start:
            return False
        period = self.ls_dense_period if g <= self.ls_dense_until else self.ls_sparse_period
        return g % period == 0

    def is_coupling_generation(self, g: int) -> bool:
        return self.scheme == "D" and g >= self.coupling_start and g % self.n_link == 0

    def to_dict(self) -> dict:
        d = asdict(self)
        d["cell_widths"] = list(self.cell_widths) if self.cell_widths else None
        return d


def ls_generations(config: RunConfig) -> list[int]:
    return [g for g in range(1, config.n_gen + 1) if config.is_ls_generation(g)]


def default_cell_widths(net: PipeNetwork) -> tuple[float, float]:
    """Objective range estimate / 256: full cost span, resilience span of 1."""
    lo = cost(net, np.zeros(net.n_real, dtype=int))
    hi = cost(net, net.option_counts - 1)
    span = hi - lo
    return (span / 256.0 if span > 0 else 1.0, 1.0 / 256.0)


def run_seed(master: int, run_index: int) -> int:
    return int(np.random.SeedSequence([int(master), int(run_index)]).generate_state(1, np.uint64)[0])


@dataclass
class RunStats:
    run_index: int
    seed: int
    fe_total: int = 0
    ls_passes: int = 0
    ls_evaluations: int = 0
    ls_inserted: int = 0
    coupling_events: int = 0
    rejected_full_count: int = 0
    archive_size_trace: list[int] = field(default_factory=list)
    wall_time: float = 0.0


@dataclass
class RunResult:
    nd_set: list[Solution]
    stats: RunStats
    population: Population
    archive: HypergridArchive | None


def _evaluate(evaluator: Evaluator, genes: np.ndarray, upper: np.ndarray):
    idx = round_genes(genes, upper)
    rows = [tuple(r) for r in idx.tolist()]
    return rows, [evaluator(r) for r in rows]


def _offer(archive: HypergridArchive, rows, evals) -> None:
    for row, ev in zip(rows, evals):
        if ev.feasible and not archive.dominates_point(ev.cost, ev.resilience):
            archive.try_insert(Solution(row, ev))


def run_single(
    config: RunConfig,
    net: PipeNetwork,
    run_index: int = 0,
    cache: dict | None = None,
    on_generation: Callable[[int, Population], None] | None = None,
) -> RunResult:
    """One independent run of the configured scheme."""
    config.validate()
    started = time.perf_counter()
    seed = run_seed(config.seed, run_index)
    rng = np.random.default_rng(seed)
    stats = RunStats(run_index, seed)
    evaluator = Evaluator(net, cache)
    upper = net.upper_bounds
    n = config.pop_size

    archive = None
    if config.scheme != "A":
        archive = HypergridArchive(config.cell_widths or default_cell_widths(net), config.max_occupancy)

    genes = rng.random((n, net.n_real)) * upper
    rows, evals = _evaluate(evaluator, genes, upper)
    pop = Population(genes, evals)
    assign_rank_and_crowding(pop)
    if archive is not None:
        _offer(archive, rows, evals)
        stats.archive_size_trace.append(len(archive))
    if on_generation:
        on_generation(0, pop)

    for g in range(1, config.n_gen + 1):
        if archive is not None and config.is_coupling_generation(g) and len(archive):
            picks = archive.select_roulette(rng, n)
            child_genes = np.array([s.indices for s in picks], dtype=float).reshape(n, net.n_real)
            stats.coupling_events += 1
        else:
            child_genes = make_children(pop, config.operators, rng, upper)
        rows, evals = _evaluate(evaluator, child_genes, upper)
        if archive is not None:
            _offer(archive, rows, evals)
            if config.is_ls_generation(g):
                ls = local_search_pass(archive, evaluator, config.ls_sample, rng)
                stats.ls_passes += 1
                stats.ls_evaluations += ls.evaluations
                stats.ls_inserted += ls.inserted
            stats.archive_size_trace.append(len(archive))
        combined = Population.concat(pop, Population(child_genes, evals))
        pop = combined.take(environmental_selection(combined, n))
        if on_generation:
            on_generation(g, pop)
        if g % 1000 == 0:
            log.info("run %d: generation %d, fe %d", run_index, g, evaluator.count)

    if archive is not None:
        nd_set = archive.snapshot()
        stats.rejected_full_count = archive.rejected_full_count
        if archive.rejected_full_count:
            log.warning(
                "run %d: %d candidates rejected by full cells; widen cell widths or raise max_occupancy",
                run_index,
                archive.rejected_full_count,
            )
    else:
        idx = round_genes(pop.genes, upper)
        nd_set = nondominated(
            [
                Solution(tuple(idx[i].tolist()), pop.evals[i])
                for i in range(len(pop))
                if pop.rank[i] == 0 and pop.feasible[i]
            ]
        )
    stats.fe_total = evaluator.count
    stats.wall_time = time.perf_counter() - started
    return RunResult(nd_set, stats, pop, archive)


@dataclass
class AggregateResult:
    merged_nd_set: list[Solution]
    runs: list[RunStats]

    @property
    def fe_total(self) -> int:
        return sum(r.fe_total for r in self.runs)


def _run_worker(args):
    config, net, run_index = args
    res = run_single(config, net, run_index, cache={})
    return res.nd_set, res.stats


def run_all(config: RunConfig, net: PipeNetwork, jobs: int = 1) -> AggregateResult:
    """All independent runs, merged into one non-dominated set.

    Results do not depend on ``jobs``: merging always follows run order.
    """
    config.validate()
    tasks = [(config, net, i) for i in range(config.n_runs)]
    if jobs > 1 and config.n_runs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            outcomes = list(pool.map(_run_worker, tasks))
    else:
        cache: dict = {}
        outcomes = []
        for task in tasks:
            res = run_single(task[0], task[1], task[2], cache=cache)
            outcomes.append((res.nd_set, res.stats))
    merged = nondominated([s for nd, _ in outcomes for s in nd])
    return AggregateResult(merged, [st for _, st in outcomes])
