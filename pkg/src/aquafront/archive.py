"""External archive of non-dominated solutions on an unbounded fixed hypergrid."""

from __future__ import annotations

import enum
import math
from bisect import bisect_left, bisect_right
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import EmptyArchive
from .objectives import Evaluation


@dataclass(frozen=True)
class Solution:
    indices: tuple[int, ...]
    eval: Evaluation

    @property
    def cost(self) -> float:
        return self.eval.cost

    @property
    def resilience(self) -> float:
        return self.eval.resilience


class InsertResult(enum.Enum):
    INSERTED = "inserted"
    DOMINATED = "dominated"
    DUPLICATE = "duplicate"
    CELL_FULL = "cell_full"


def cell_of(objectives: Sequence[float], widths: Sequence[float], origin: Sequence[float] = (0.0, 0.0)):
    return tuple(math.floor((o - z) / w) for o, w, z in zip(objectives, widths, origin))


class HypergridArchive:
    """Fixed-cell-size grid without extent limits, capped per cell.

    Alongside the grid cells the archive keeps its members sorted by cost.
    With two objectives a mutually non-dominated set sorted by ascending cost
    also has strictly ascending resilience, so dominance tests against the
    whole archive reduce to a bisection.
    """

    def __init__(self, widths: Sequence[float], max_occupancy: int = 64, origin: Sequence[float] = (0.0, 0.0)):
        if len(widths) != 2 or any(not w > 0 for w in widths):
            raise ValueError("need two positive cell widths")
        if max_occupancy < 1:
            raise ValueError("max_occupancy must be at least 1")
        self.widths = tuple(float(w) for w in widths)
        self.origin = tuple(float(o) for o in origin)
        self.max_occupancy = int(max_occupancy)
        self.cells: dict[tuple[int, int], list[Solution]] = {}
        self.rejected_full_count = 0
        self._costs: list[float] = []
        self._res: list[float] = []
        self._members: list[Solution] = []
        self._index_set: set[tuple[int, ...]] = set()

    def __len__(self) -> int:
        return len(self._members)

    def __contains__(self, indices) -> bool:
        return tuple(indices) in self._index_set

    def cell_of(self, sol: Solution):
        return cell_of(sol.eval.objectives, self.widths, self.origin)

    def try_insert(self, candidate: Solution) -> InsertResult:
        """Offer one feasible solution to the archive."""
        if not candidate.eval.feasible:
            raise ValueError("infeasible solutions are never archived")
        c, r = candidate.cost, candidate.resilience
        i = bisect_right(self._costs, c)
        if i > 0:
            pc, pr = self._costs[i - 1], self._res[i - 1]
            if pc == c and pr == r:
                return InsertResult.DUPLICATE
            if pr >= r:
                return InsertResult.DOMINATED
        j = bisect_left(self._costs, c)
        k = j
        while k < len(self._res) and self._res[k] <= r:
            k += 1
        cell = self.cell_of(candidate)
        occupants = self.cells.get(cell, ())
        leaving = sum(1 for s in self._members[j:k] if self.cell_of(s) == cell)
        if len(occupants) - leaving >= self.max_occupancy:
            self.rejected_full_count += 1
            return InsertResult.CELL_FULL
        for s in self._members[j:k]:
            self._discard_from_cell(s)
        self._costs[j:k] = [c]
        self._res[j:k] = [r]
        self._members[j:k] = [candidate]
        self.cells.setdefault(cell, []).append(candidate)
        self._index_set.add(candidate.indices)
        return InsertResult.INSERTED

    def _discard_from_cell(self, s: Solution) -> None:
        cell = self.cell_of(s)
        members = self.cells[cell]
        members.remove(s)
        if not members:
            del self.cells[cell]
        self._index_set.discard(s.indices)

    def dominates_point(self, cost: float, res: float) -> bool:
        """True if some stored solution dominates or equals (cost, res)."""
        i = bisect_right(self._costs, cost)
        return i > 0 and self._res[i - 1] >= res

    def select_roulette(self, rng, n: int | None = None):
        """Draw by cell with probability proportional to 1/occupancy, then uniformly within."""
        if not self._members:
            raise EmptyArchive("cannot select from an empty archive")
        keys = sorted(self.cells)
        occ = np.array([len(self.cells[k]) for k in keys], dtype=float)
        p = (1.0 / occ) / np.sum(1.0 / occ)
        count = 1 if n is None else n
        which = rng.choice(len(keys), size=count, p=p)
        within = rng.random(count)
        picks = []
        for w, u in zip(which, within):
            members = self.cells[keys[w]]
            picks.append(members[min(int(u * len(members)), len(members) - 1)])
        return picks[0] if n is None else picks

    def snapshot(self) -> list[Solution]:
        """Stored solutions by ascending cost."""
        return list(self._members)

    def state(self):
        """Hashable picture of the stored contents (not the tally), for change detection."""
        return (
            tuple(self._members),
            tuple(sorted((k, tuple(v)) for k, v in self.cells.items())),
        )


def nondominated(solutions: Sequence[Solution]) -> list[Solution]:
    """Mutually non-dominated, objective-deduplicated subset, by ascending cost.

    Among equal objective vectors the earliest in ``solutions`` is kept.
    """
    order = sorted(range(len(solutions)), key=lambda i: (solutions[i].cost, -solutions[i].resilience, i))
    kept: list[Solution] = []
    best = -math.inf
    for i in order:
        s = solutions[i]
        if s.resilience > best:
            kept.append(s)
            best = s.resilience
    return kept
