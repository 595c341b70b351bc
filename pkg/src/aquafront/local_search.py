"""Single-pipe +/-1 diameter-step neighborhood search around archived solutions."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, Sequence

from .archive import HypergridArchive, InsertResult, Solution
from .objectives import Evaluator


@dataclass
class LocalSearchStats:
    evaluations: int = 0
    inserted: int = 0
    dominated_removed: int = 0


def neighborhood(indices: Sequence[int], option_counts: Sequence[int]) -> Iterator[tuple[int, ...]]:
    """Vectors one index step away on a single pipe; moves off the table are skipped."""
    base = tuple(int(i) for i in indices)
    for pos, (value, k) in enumerate(zip(base, option_counts)):
        for step in (-1, 1):
            moved = value + step
            if 0 <= moved < k:
                yield base[:pos] + (moved,) + base[pos + 1 :]


def local_search_pass(
    archive: HypergridArchive,
    evaluator: Evaluator,
    sample: float = 1.0,
    rng=None,
) -> LocalSearchStats:
    """Evaluate the neighborhood of every member of a frozen archive snapshot.

    Neighbors already stored in the archive, or already evaluated earlier in
    this pass, are skipped without a solve. ``sample < 1`` sweeps a random
    subset of the snapshot and then needs ``rng``.
    """
    stats = LocalSearchStats()
    frozen = archive.snapshot()
    if sample < 1.0:
        keep = rng.random(len(frozen)) < sample
        frozen = [s for s, k in zip(frozen, keep) if k]
    counts = evaluator.net.option_counts
    seen: set[tuple[int, ...]] = set()
    for sol in frozen:
        for nb in neighborhood(sol.indices, counts):
            if nb in seen or nb in archive:
                continue
            seen.add(nb)
            ev = evaluator(nb)
            stats.evaluations += 1
            if not ev.feasible:
                continue
            before = len(archive)
            if archive.try_insert(Solution(nb, ev)) is InsertResult.INSERTED:
                stats.inserted += 1
                stats.dominated_removed += before + 1 - len(archive)
    return stats
