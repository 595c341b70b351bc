"""Comparison of two non-dominated sets, 2-D hypervolume and front export.

Objective vectors are ``(cost, resilience)``: cost minimized, resilience
maximized.
"""

from __future__ import annotations

import csv
import io
import math
import os
import tempfile
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Sequence

from .archive import Solution
from .errors import InputNotAFront, IoFailure, RefPointInvalid

REL_TOL = 1e-9


@dataclass(frozen=True)
class ComparisonReport:
    n1_total: int
    n1_accepted: int
    n1_rejected: int
    n1_unique: int
    n2_total: int
    n2_accepted: int
    n2_rejected: int
    n2_unique: int
    n_common: int
    fe1: int | None = None
    fe2: int | None = None

    def __post_init__(self):
        for side in ("1", "2"):
            total, acc, rej, uniq = (getattr(self, f"n{side}_{k}") for k in ("total", "accepted", "rejected", "unique"))
            if total != acc + rej or acc != self.n_common + uniq or min(total, acc, rej, uniq) < 0:
                raise AssertionError(f"inconsistent counts on side {side}: {self}")

    def swapped(self) -> "ComparisonReport":
        return ComparisonReport(
            self.n2_total, self.n2_accepted, self.n2_rejected, self.n2_unique,
            self.n1_total, self.n1_accepted, self.n1_rejected, self.n1_unique,
            self.n_common, self.fe2, self.fe1,
        )

    def to_dict(self) -> dict:
        return asdict(self)


def _close(a: Sequence[float], b: Sequence[float], tol: float) -> bool:
    return all(math.isclose(x, y, rel_tol=tol, abs_tol=0.0) for x, y in zip(a, b))


def _dominates(a: Sequence[float], b: Sequence[float]) -> bool:
    return a[0] <= b[0] and a[1] >= b[1] and (a[0] < b[0] or a[1] > b[1])


def validate_front(points: Sequence[Sequence[float]]) -> None:
    """Raise :class:`InputNotAFront` on a dominated or duplicated row (0-based)."""
    order = sorted(range(len(points)), key=lambda i: (points[i][0], -points[i][1], i))
    best = -math.inf
    prev = None
    for i in order:
        c, r = points[i]
        if not (math.isfinite(c) and math.isfinite(r)):
            raise InputNotAFront("non-finite objective value", i)
        if prev is not None and (c, r) == tuple(points[prev]):
            raise InputNotAFront(f"duplicates row {prev}", i)
        if r <= best:
            raise InputNotAFront(f"dominated by row {prev}", i)
        best, prev = r, i


def compare_fronts(
    pf1,
    pf2,
    tol: float = REL_TOL,
    fe1: int | None = None,
    fe2: int | None = None,
    match: str = "objective",
    designs1=None,
    designs2=None,
) -> ComparisonReport:
    """Accepted/rejected/unique/common counts for two non-dominated sets.

    A member is rejected when a member of the other set strictly dominates it
    without being tolerance-equal to it. With ``match="objective"`` common
    members are paired one-to-one between the two accepted sets, walking both
    in cost order; ``match="decision"`` pairs identical index vectors instead
    and needs ``designs1``/``designs2`` aligned with the fronts.
    """
    p1 = [tuple(map(float, p)) for p in pf1]
    p2 = [tuple(map(float, p)) for p in pf2]
    validate_front(p1)
    validate_front(p2)

    def rejected(mine, other):
        return [any(_dominates(o, m) and not _close(o, m, tol) for o in other) for m in mine]

    rej1, rej2 = rejected(p1, p2), rejected(p2, p1)
    acc1 = sorted(p for p, r in zip(p1, rej1) if not r)
    acc2 = sorted(p for p, r in zip(p2, rej2) if not r)
    common = 0
    i = j = 0
    if match == "decision":
        if designs1 is None or designs2 is None:
            raise ValueError("decision-space matching needs both design lists")
        kept1 = {tuple(d) for d, r in zip(designs1, rej1) if not r}
        kept2 = {tuple(d) for d, r in zip(designs2, rej2) if not r}
        common = len(kept1 & kept2)
    elif match != "objective":
        raise ValueError(f"unknown match mode {match!r}")
    while match == "objective" and i < len(acc1) and j < len(acc2):
        if _close(acc1[i], acc2[j], tol):
            common += 1
            i += 1
            j += 1
        elif acc1[i] < acc2[j]:
            i += 1
        else:
            j += 1
    return ComparisonReport(
        len(p1), len(acc1), sum(rej1), len(acc1) - common,
        len(p2), len(acc2), sum(rej2), len(acc2) - common,
        common, fe1, fe2,
    )


def hypervolume_2d(front, ref_point: Sequence[float]) -> float:
    """Area weakly dominated by ``front`` and bounded by ``ref_point``."""
    rc, rr = map(float, ref_point)
    pts = sorted((float(c), float(r)) for c, r in front)
    for c, r in pts:
        if c > rc or r < rr:
            raise RefPointInvalid(f"reference point {ref_point} is not dominated by ({c}, {r})")
    area = 0.0
    best = rr
    for k, (c, r) in enumerate(pts):
        best = max(best, r)
        nxt = pts[k + 1][0] if k + 1 < len(pts) else rc
        area += (nxt - c) * (best - rr)
    return area


# -- files -----------------------------------------------------------------------


def atomic_write(path: str | Path, text: str) -> None:
    """Write via a temporary file in the target directory, then rename."""
    path = Path(path)
    try:
        fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
        try:
            with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
                fh.write(text)
            os.replace(tmp, path)
        except BaseException:
            if os.path.exists(tmp):
                os.unlink(tmp)
            raise
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc}") from exc


def front_csv(front: Sequence[Solution]) -> str:
    n = len(front[0].indices) if front else 0
    header = ["cost", "resilience"] + [f"idx_{k}" for k in range(1, n + 1)]
    lines = [",".join(header)]
    for s in front:
        lines.append(",".join([f"{s.cost:.17g}", f"{s.resilience:.17g}", *map(str, s.indices)]))
    return "\n".join(lines) + "\n"


def parse_front_csv(text: str) -> list[tuple[float, float, tuple[int, ...]]]:
    """Rows of (cost, resilience, indices) from front CSV text."""
    reader = csv.reader(io.StringIO(text))
    header = next(reader, None)
    if not header or header[:2] != ["cost", "resilience"]:
        raise InputNotAFront("missing cost,resilience header")
    rows = []
    for i, rec in enumerate(reader):
        if not rec:
            continue
        try:
            rows.append((float(rec[0]), float(rec[1]), tuple(int(x) for x in rec[2:])))
        except (ValueError, IndexError) as exc:
            raise InputNotAFront(f"malformed row: {exc}", i) from exc
    return rows


def read_front_csv(path: str | Path) -> list[tuple[float, float, tuple[int, ...]]]:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise IoFailure(f"cannot read {path}: {exc}") from exc
    return parse_front_csv(text)


def front_svg(front: Sequence[Solution], title: str = "") -> str:
    width, height, pad = 640, 480, 60
    cs = [s.cost for s in front]
    rs = [s.resilience for s in front]
    c0, c1 = min(cs), max(cs)
    r0, r1 = min(rs), max(rs)
    cspan = (c1 - c0) or 1.0
    rspan = (r1 - r0) or 1.0

    def x(c):
        return pad + (c - c0) / cspan * (width - 2 * pad)

    def y(r):
        return height - pad - (r - r0) / rspan * (height - 2 * pad)

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<line x1="{pad}" y1="{height - pad}" x2="{width - pad}" y2="{height - pad}" stroke="black"/>',
        f'<line x1="{pad}" y1="{pad}" x2="{pad}" y2="{height - pad}" stroke="black"/>',
        f'<text x="{width / 2}" y="{height - 15}" text-anchor="middle" font-size="14">Cost</text>',
        f'<text x="18" y="{height / 2}" text-anchor="middle" font-size="14" '
        f'transform="rotate(-90 18 {height / 2})">Resilience</text>',
        f'<text x="{pad}" y="{height - pad + 18}" font-size="10">{c0:.6g}</text>',
        f'<text x="{width - pad}" y="{height - pad + 18}" font-size="10" text-anchor="end">{c1:.6g}</text>',
        f'<text x="{pad - 5}" y="{height - pad}" font-size="10" text-anchor="end">{r0:.4g}</text>',
        f'<text x="{pad - 5}" y="{pad + 4}" font-size="10" text-anchor="end">{r1:.4g}</text>',
    ]
    if title:
        parts.append(f'<text x="{width / 2}" y="25" text-anchor="middle" font-size="16">{title}</text>')
    for s in front:
        parts.append(f'<circle cx="{x(s.cost):.2f}" cy="{y(s.resilience):.2f}" r="3" fill="steelblue"/>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def export_front(front: Sequence[Solution], fmt: str, path: str | Path, title: str = "") -> Path:
    if not front:
        raise ValueError("cannot export an empty front")
    if fmt == "csv":
        text = front_csv(front)
    elif fmt == "svg":
        text = front_svg(front, title)
    else:
        raise ValueError(f"unknown format {fmt!r}")
    atomic_write(path, text)
    return Path(path)
