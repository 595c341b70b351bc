"""Hydraulic network data model, INP-subset reader/writer and cost tables.

Internal units are SI throughout: metres, cubic metres per second, kW for
pump power. Unit conversion happens once, at parse time.
"""

from __future__ import annotations

import csv
import io
import json
from collections import deque
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import (
    DanglingReference,
    DuplicateId,
    InvalidNetwork,
    MalformedRecord,
    NonAscendingDiameter,
    NonContiguousIndex,
    ParseError,
    UnknownSection,
)

# flow unit -> (m^3/s per unit, uses US customary lengths)
FLOW_UNITS: dict[str, tuple[float, bool]] = {
    "CMS": (1.0, False),
    "LPS": (1e-3, False),
    "LPM": (1e-3 / 60.0, False),
    "MLD": (1e3 / 86400.0, False),
    "CMH": (1.0 / 3600.0, False),
    "CMD": (1.0 / 86400.0, False),
    "CFS": (0.028316846592, True),
    "GPM": (6.30901964e-05, True),
    "MGD": (0.0438126364, True),
    "IMGD": (0.0526167891, True),
    "AFD": (0.0142764101, True),
}
FT = 0.3048
INCH = 0.0254
HP_KW = 0.745699872

SUPPORTED_SECTIONS = {"JUNCTIONS", "RESERVOIRS", "PIPES", "PUMPS", "COORDINATES", "OPTIONS"}
# presentation/bookkeeping sections that carry nothing for a single steady-state solve
IGNORED_SECTIONS = {
    "TITLE", "VERTICES", "LABELS", "BACKDROP", "TAGS", "REPORT", "TIMES", "ENERGY", "PATTERNS", "END",
}


@dataclass(frozen=True)
class Junction:
    id: str
    elevation: float
    demand: float
    min_head: float = 0.0
    coordinates: tuple[float, float] | None = None

    @property
    def required_head(self) -> float:
        return self.elevation + self.min_head


@dataclass(frozen=True)
class Reservoir:
    id: str
    head: float
    coordinates: tuple[float, float] | None = None


@dataclass(frozen=True)
class Pipe:
    id: str
    start: str
    end: str
    length: float
    roughness: float
    table: str


@dataclass(frozen=True)
class Pump:
    """Constant-power pump, ``power`` in kW."""

    id: str
    start: str
    end: str
    power: float


@dataclass(frozen=True)
class OptionTable:
    """Ordered diameter options (m) with unit costs (currency per m).

    A zero diameter, allowed only as entry 0 with zero cost, means "no pipe".
    """

    diameters: tuple[float, ...]
    unit_costs: tuple[float, ...]

    def __post_init__(self):
        d = tuple(float(x) for x in self.diameters)
        c = tuple(float(x) for x in self.unit_costs)
        object.__setattr__(self, "diameters", d)
        object.__setattr__(self, "unit_costs", c)
        if not d or len(d) != len(c):
            raise ValueError("option table needs matching, non-empty diameter and cost lists")
        if any(b <= a for a, b in zip(d, d[1:])):
            raise NonAscendingDiameter("diameters must be strictly ascending")
        if d[0] < 0 or any(x < 0 for x in c):
            raise ValueError("diameters and unit costs must be non-negative")
        if d[0] == 0.0 and c[0] != 0.0:
            raise ValueError("the zero-diameter option must have zero cost")

    def __len__(self) -> int:
        return len(self.diameters)

    @property
    def has_absent_option(self) -> bool:
        return self.diameters[0] == 0.0


@dataclass(frozen=True, eq=False)
class PipeNetwork:
    """Immutable hydraulic graph; validated on construction.

    Pipes whose option table has a single entry are fixed; the rest are
    decision pipes and make up the design genome, in declaration order.
    """

    junctions: tuple[Junction, ...]
    reservoirs: tuple[Reservoir, ...]
    pipes: tuple[Pipe, ...]
    option_tables: Mapping[str, OptionTable]
    pumps: tuple[Pump, ...] = ()
    title: str = ""

    def __post_init__(self):
        object.__setattr__(self, "junctions", tuple(self.junctions))
        object.__setattr__(self, "reservoirs", tuple(self.reservoirs))
        object.__setattr__(self, "pipes", tuple(self.pipes))
        object.__setattr__(self, "pumps", tuple(self.pumps))
        object.__setattr__(self, "option_tables", dict(self.option_tables))
        self._validate()

    def _validate(self) -> None:
        if not self.reservoirs:
            raise InvalidNetwork("network has no reservoir")
        seen: set[str] = set()
        for node in (*self.junctions, *self.reservoirs):
            if node.id in seen:
                raise DuplicateId(f"duplicate node id {node.id!r}")
            seen.add(node.id)
        for j in self.junctions:
            if j.demand < 0:
                raise InvalidNetwork(f"junction {j.id!r} has negative demand")
        link_ids: set[str] = set()
        for link in (*self.pipes, *self.pumps):
            if link.id in link_ids:
                raise DuplicateId(f"duplicate link id {link.id!r}")
            link_ids.add(link.id)
            for end in (link.start, link.end):
                if end not in seen:
                    raise DanglingReference(f"link {link.id!r} references unknown node {end!r}")
            if link.start == link.end:
                raise InvalidNetwork(f"link {link.id!r} starts and ends at the same node")
        for p in self.pipes:
            if not (p.length > 0 and p.roughness > 0):
                raise InvalidNetwork(f"pipe {p.id!r} needs positive length and roughness")
            if p.table not in self.option_tables:
                raise DanglingReference(f"pipe {p.id!r} references unknown option table {p.table!r}")
        for pump in self.pumps:
            if not pump.power > 0:
                raise InvalidNetwork(f"pump {pump.id!r} needs positive power")
        unreached = self.unreachable_nodes(None)
        if unreached:
            raise InvalidNetwork(f"graph is not connected to a reservoir: {', '.join(unreached)}")

    # -- lookup helpers -------------------------------------------------------

    @cached_property
    def junction_index(self) -> dict[str, int]:
        return {j.id: i for i, j in enumerate(self.junctions)}

    @cached_property
    def reservoir_index(self) -> dict[str, int]:
        return {r.id: i for i, r in enumerate(self.reservoirs)}

    @cached_property
    def decision_pipes(self) -> tuple[int, ...]:
        return tuple(i for i, p in enumerate(self.pipes) if len(self.option_tables[p.table]) > 1)

    @property
    def n_real(self) -> int:
        return len(self.decision_pipes)

    @cached_property
    def option_counts(self) -> np.ndarray:
        return np.array([len(self.option_tables[self.pipes[i].table]) for i in self.decision_pipes], dtype=int)

    @property
    def upper_bounds(self) -> np.ndarray:
        return (self.option_counts - 1).astype(float)

    @cached_property
    def _option_matrices(self) -> tuple[np.ndarray, np.ndarray]:
        kmax = int(self.option_counts.max()) if self.n_real else 1
        diam = np.zeros((self.n_real, kmax))
        cost = np.zeros((self.n_real, kmax))
        for row, i in enumerate(self.decision_pipes):
            t = self.option_tables[self.pipes[i].table]
            diam[row, : len(t)] = t.diameters
            cost[row, : len(t)] = t.unit_costs
        return diam, cost

    @cached_property
    def _fixed(self) -> tuple[np.ndarray, np.ndarray]:
        diam = np.zeros(len(self.pipes))
        cost = np.zeros(len(self.pipes))
        for i, p in enumerate(self.pipes):
            t = self.option_tables[p.table]
            diam[i] = t.diameters[0]
            cost[i] = t.unit_costs[0]
        return diam, cost

    @cached_property
    def pipe_lengths(self) -> np.ndarray:
        return np.array([p.length for p in self.pipes])

    def check_indices(self, indices: Sequence[int]) -> np.ndarray:
        idx = np.asarray(indices, dtype=int)
        if idx.shape != (self.n_real,):
            raise ValueError(f"expected {self.n_real} option indices, got {idx.size}")
        if np.any(idx < 0) or np.any(idx >= self.option_counts):
            raise ValueError("option index out of range")
        return idx

    def diameters(self, indices: Sequence[int]) -> np.ndarray:
        """Per-pipe diameters (m) for a decision-index vector, in pipe order."""
        idx = np.asarray(indices, dtype=int)
        diam = self._fixed[0].copy()
        if self.n_real:
            table = self._option_matrices[0]
            diam[list(self.decision_pipes)] = table[np.arange(self.n_real), idx]
        return diam

    def unit_costs(self, indices: Sequence[int]) -> np.ndarray:
        idx = np.asarray(indices, dtype=int)
        cost = self._fixed[1].copy()
        if self.n_real:
            table = self._option_matrices[1]
            cost[list(self.decision_pipes)] = table[np.arange(self.n_real), idx]
        return cost

    def unreachable_nodes(self, diameters: np.ndarray | None) -> list[str]:
        """Junction ids with no path to a reservoir over realized links."""
        adj: dict[str, list[str]] = {n: [] for n in self.junction_index}
        adj.update({r.id: [] for r in self.reservoirs})
        for k, p in enumerate(self.pipes):
            if diameters is not None and diameters[k] <= 0:
                continue
            adj[p.start].append(p.end)
            adj[p.end].append(p.start)
        for pump in self.pumps:
            adj[pump.start].append(pump.end)
            adj[pump.end].append(pump.start)
        seen = {r.id for r in self.reservoirs}
        queue = deque(seen)
        while queue:
            for nxt in adj[queue.popleft()]:
                if nxt not in seen:
                    seen.add(nxt)
                    queue.append(nxt)
        return [j.id for j in self.junctions if j.id not in seen]

    def summary(self) -> str:
        return (
            f"{self.title or 'network'}: {len(self.reservoirs)} reservoir(s), "
            f"{len(self.junctions)} junction(s), {len(self.pipes)} pipe(s), "
            f"{len(self.pumps)} pump(s), {self.n_real} decision pipe(s), "
            f"{int(np.prod(self.option_counts.astype(float))):d} designs"
        )


@dataclass(frozen=True)
class DesignVector:
    """Real-valued genome; gene ``i`` lives in ``[0, K_i - 1]``."""

    genes: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        genes = np.asarray(self.genes, dtype=float)
        upper = np.asarray(self.upper, dtype=float)
        if genes.shape != upper.shape:
            raise ValueError("genes and bounds differ in length")
        if np.any(genes < 0) or np.any(genes > upper):
            raise ValueError("gene outside its bounds")
        object.__setattr__(self, "genes", genes)
        object.__setattr__(self, "upper", upper)

    @classmethod
    def for_network(cls, net: PipeNetwork, genes: Iterable[float]) -> "DesignVector":
        return cls(np.asarray(list(genes), dtype=float), net.upper_bounds)


def round_genes(genes: np.ndarray, upper: np.ndarray | None = None) -> np.ndarray:
    """Nearest integer with ties rounded up; vectorized over trailing axis."""
    idx = np.floor(np.asarray(genes, dtype=float) + 0.5).astype(np.int64)
    np.maximum(idx, 0, out=idx)
    if upper is not None:
        np.minimum(idx, np.asarray(upper).astype(np.int64), out=idx)
    return idx


def round_to_indices(d: DesignVector) -> list[int]:
    return round_genes(d.genes, d.upper).tolist()


# -- configuration sidecar -----------------------------------------------------


@dataclass
class NetworkConfig:
    """Everything an INP file does not say: units, pressure limits, cost tables.

    ``default_table``, when set, turns every pipe not listed in ``fixed_pipes``
    into a decision pipe using that table; ``pipe_tables`` overrides per pipe.
    """

    units: str | None = None
    min_head: float = 0.0
    min_head_overrides: dict[str, float] = field(default_factory=dict)
    option_tables: dict[str, OptionTable] = field(default_factory=dict)
    default_table: str | None = None
    pipe_tables: dict[str, str] = field(default_factory=dict)
    fixed_pipes: tuple[str, ...] = ()
    cell_widths: tuple[float, float] | None = None
    preset: str | None = None


def load_config(path: str | Path) -> NetworkConfig:
    """Read a JSON network sidecar. Cost-table paths are relative to the file."""
    path = Path(path)
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: {exc.msg}", exc.lineno) from exc
    tables = {}
    for name, src in raw.get("cost_tables", {}).items():
        if isinstance(src, str):
            tables[name] = parse_cost_table((path.parent / src).read_text(encoding="utf-8"))
        else:
            tables[name] = table_from_rows(src)
    widths = raw.get("cell_widths")
    return NetworkConfig(
        units=raw.get("units"),
        min_head=float(raw.get("min_head", 0.0)),
        min_head_overrides={k: float(v) for k, v in raw.get("min_head_overrides", {}).items()},
        option_tables=tables,
        default_table=raw.get("default_table"),
        pipe_tables=dict(raw.get("pipe_tables", {})),
        fixed_pipes=tuple(raw.get("fixed_pipes", ())),
        cell_widths=tuple(float(w) for w in widths) if widths else None,
        preset=raw.get("preset"),
    )


# -- cost tables ----------------------------------------------------------------


def table_from_rows(rows: Iterable[Sequence[float]]) -> OptionTable:
    """Rows of ``(index, diameter_mm, unit_cost)``, in any order."""
    rows = sorted((int(i), float(d), float(c)) for i, d, c in rows)
    if [r[0] for r in rows] != list(range(len(rows))):
        raise NonContiguousIndex("option indices must be 0..K-1 without gaps")
    return OptionTable(tuple(r[1] * 1e-3 for r in rows), tuple(r[2] for r in rows))


def parse_cost_table(text: str) -> OptionTable:
    reader = csv.reader(io.StringIO(text))
    rows = []
    header_seen = False
    for lineno, rec in enumerate(reader, start=1):
        if not rec or not "".join(rec).strip():
            continue
        if not header_seen:
            header_seen = True
            if [c.strip() for c in rec] != ["index", "diameter_mm", "unit_cost"]:
                raise MalformedRecord("expected header index,diameter_mm,unit_cost", lineno)
            continue
        if len(rec) != 3:
            raise MalformedRecord("expected 3 fields", lineno)
        try:
            idx, diam, cost = int(rec[0]), float(rec[1]), float(rec[2])
        except ValueError as exc:
            raise MalformedRecord(str(exc), lineno) from exc
        rows.append((idx, diam, cost))
    if not rows:
        raise MalformedRecord("cost table is empty")
    try:
        return table_from_rows(rows)
    except NonAscendingDiameter:
        raise
    except ValueError as exc:
        raise MalformedRecord(str(exc)) from exc


def format_cost_table(table: OptionTable) -> str:
    lines = ["index,diameter_mm,unit_cost"]
    for i, (d, c) in enumerate(zip(table.diameters, table.unit_costs)):
        lines.append(f"{i},{d * 1e3:.17g},{c:.17g}")
    return "\n".join(lines) + "\n"


# -- INP subset -----------------------------------------------------------------


def _floats(fields: Sequence[str], lineno: int) -> list[float]:
    try:
        return [float(f) for f in fields]
    except ValueError as exc:
        raise MalformedRecord(f"bad number: {exc}", lineno) from exc


def _split_inp(text: str) -> dict[str, list[tuple[int, list[str]]]]:
    sections: dict[str, list[tuple[int, list[str]]]] = {}
    current: str | None = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split(";", 1)[0].strip()
        if not line:
            continue
        if line.startswith("["):
            if not line.endswith("]"):
                raise MalformedRecord(f"bad section header {line!r}", lineno)
            name = line[1:-1].strip().upper()
            if name not in SUPPORTED_SECTIONS and name not in IGNORED_SECTIONS:
                raise UnknownSection(f"unsupported section [{name}]", lineno)
            current = name
            sections.setdefault(name, [])
            continue
        if current is None:
            raise MalformedRecord("data before the first section header", lineno)
        if current == "TITLE":
            sections[current].append((lineno, [line]))
        elif current not in IGNORED_SECTIONS:
            sections[current].append((lineno, line.split()))
    return sections


def parse_inp(text: str, config: NetworkConfig | None = None) -> PipeNetwork:
    """Parse the supported INP subset into a validated :class:`PipeNetwork`.

    Flow units come from ``config.units``, then ``[OPTIONS] Units``, then CMS.
    """
    config = config or NetworkConfig()
    sections = _split_inp(text)

    units = None
    for lineno, rec in sections.get("OPTIONS", []):
        key = rec[0].upper()
        if key == "UNITS" and len(rec) >= 2:
            units = rec[1].upper()
        elif key == "HEADLOSS" and len(rec) >= 2 and rec[1].upper() != "H-W":
            raise MalformedRecord(f"only Hazen-Williams headloss is supported, got {rec[1]}", lineno)
    units = (config.units or units or "CMS").upper()
    if units not in FLOW_UNITS:
        raise MalformedRecord(f"unknown flow units {units!r}")
    qf, us = FLOW_UNITS[units]
    lf = FT if us else 1.0
    df = INCH if us else 1e-3
    pf = HP_KW if us else 1.0

    def check_new(node_id: str, lineno: int, seen: dict[str, int]) -> None:
        if node_id in seen:
            raise DuplicateId(f"id {node_id!r} already defined on line {seen[node_id]}", lineno)
        seen[node_id] = lineno

    node_lines: dict[str, int] = {}
    coords: dict[str, tuple[float, float]] = {}
    for lineno, rec in sections.get("COORDINATES", []):
        if len(rec) < 3:
            raise MalformedRecord("coordinate record needs id x y", lineno)
        x, y = _floats(rec[1:3], lineno)
        coords[rec[0]] = (x, y)

    junction_rows = []
    for lineno, rec in sections.get("JUNCTIONS", []):
        if len(rec) < 2 or len(rec) > 4:
            raise MalformedRecord("junction record is: id elevation [demand] [pattern]", lineno)
        check_new(rec[0], lineno, node_lines)
        vals = _floats(rec[1:3], lineno)
        elev = vals[0] * lf
        demand = (vals[1] if len(vals) > 1 else 0.0) * qf
        if demand < 0:
            raise MalformedRecord("negative demand", lineno)
        junction_rows.append((rec[0], elev, demand))

    reservoirs = []
    for lineno, rec in sections.get("RESERVOIRS", []):
        if len(rec) < 2 or len(rec) > 3:
            raise MalformedRecord("reservoir record is: id head [pattern]", lineno)
        check_new(rec[0], lineno, node_lines)
        (head,) = _floats(rec[1:2], lineno)
        reservoirs.append(Reservoir(rec[0], head * lf, coords.get(rec[0])))

    for node_id in coords:
        if node_id not in node_lines:
            line = next(ln for ln, r in sections["COORDINATES"] if r[0] == node_id)
            raise DanglingReference(f"coordinates for unknown node {node_id!r}", line)

    junctions = tuple(
        Junction(
            jid,
            elev,
            demand,
            config.min_head_overrides.get(jid, config.min_head),
            coords.get(jid),
        )
        for jid, elev, demand in junction_rows
    )

    link_lines: dict[str, int] = {}
    tables = dict(config.option_tables)
    pipes = []
    for lineno, rec in sections.get("PIPES", []):
        if len(rec) < 6 or len(rec) > 8:
            raise MalformedRecord("pipe record is: id n1 n2 length diameter roughness [minorloss] [status]", lineno)
        pid, n1, n2 = rec[:3]
        check_new(pid, lineno, link_lines)
        for end in (n1, n2):
            if end not in node_lines:
                raise DanglingReference(f"pipe {pid!r} references unknown node {end!r}", lineno)
        length, diam, rough = _floats(rec[3:6], lineno)
        if len(rec) > 6 and _floats(rec[6:7], lineno)[0] != 0.0:
            raise MalformedRecord("minor losses are not supported", lineno)
        if len(rec) > 7 and rec[7].upper() != "OPEN":
            raise MalformedRecord(f"pipe status {rec[7]!r} is not supported", lineno)
        if length <= 0 or rough <= 0:
            raise MalformedRecord("pipe length and roughness must be positive", lineno)
        table = config.pipe_tables.get(pid)
        if table is None and config.default_table is not None and pid not in config.fixed_pipes:
            table = config.default_table
        if table is None:
            if diam <= 0:
                raise MalformedRecord("fixed pipe needs a positive diameter", lineno)
            table = f"fixed:{pid}"
            tables[table] = OptionTable((diam * df,), (0.0,))
        elif table not in tables:
            raise DanglingReference(f"pipe {pid!r} references unknown option table {table!r}", lineno)
        pipes.append(Pipe(pid, n1, n2, length * lf, rough, table))

    pumps = []
    for lineno, rec in sections.get("PUMPS", []):
        if len(rec) < 3:
            raise MalformedRecord("pump record is: id n1 n2 POWER value", lineno)
        pid, n1, n2 = rec[:3]
        check_new(pid, lineno, link_lines)
        for end in (n1, n2):
            if end not in node_lines:
                raise DanglingReference(f"pump {pid!r} references unknown node {end!r}", lineno)
        props = rec[3:]
        if len(props) != 2 or props[0].upper() != "POWER":
            raise MalformedRecord("only constant-power pumps (POWER value) are supported", lineno)
        (power,) = _floats(props[1:], lineno)
        if power <= 0:
            raise MalformedRecord("pump power must be positive", lineno)
        pumps.append(Pump(pid, n1, n2, power * pf))

    title = " ".join(r[0] for _, r in sections.get("TITLE", []))
    used = {p.table for p in pipes}
    return PipeNetwork(
        junctions,
        tuple(reservoirs),
        tuple(pipes),
        {k: v for k, v in tables.items() if k in used},
        tuple(pumps),
        title,
    )


def load_network(inp: str | Path, config: NetworkConfig | str | Path | None = None) -> PipeNetwork:
    if config is not None and not isinstance(config, NetworkConfig):
        config = load_config(config)
    return parse_inp(Path(inp).read_text(encoding="utf-8"), config)


def serialize_inp(net: PipeNetwork) -> str:
    """Write ``net`` as CMS-unit INP text.

    Decision pipes are written with their largest option diameter; option
    tables and pressure limits live in the sidecar config, not the INP.
    """
    g = lambda x: f"{x:.17g}"  # noqa: E731
    out = []
    if net.title:
        out += ["[TITLE]", net.title, ""]
    out += ["[OPTIONS]", "Units CMS", "Headloss H-W", ""]
    out.append("[JUNCTIONS]")
    out += [f"{j.id} {g(j.elevation)} {g(j.demand)}" for j in net.junctions]
    out += ["", "[RESERVOIRS]"]
    out += [f"{r.id} {g(r.head)}" for r in net.reservoirs]
    out += ["", "[PIPES]"]
    for p in net.pipes:
        d = net.option_tables[p.table].diameters[-1]
        out.append(f"{p.id} {p.start} {p.end} {g(p.length)} {g(d * 1e3)} {g(p.roughness)} 0 Open")
    if net.pumps:
        out += ["", "[PUMPS]"]
        out += [f"{k.id} {k.start} {k.end} POWER {g(k.power)}" for k in net.pumps]
    placed = [n for n in (*net.junctions, *net.reservoirs) if n.coordinates is not None]
    if placed:
        out += ["", "[COORDINATES]"]
        out += [f"{n.id} {g(n.coordinates[0])} {g(n.coordinates[1])}" for n in placed]
    out += ["", "[END]", ""]
    return "\n".join(out)


def config_for(net: PipeNetwork) -> NetworkConfig:
    """Sidecar config that, paired with :func:`serialize_inp`, reproduces ``net``."""
    tables = {k: v for k, v in net.option_tables.items() if not k.startswith("fixed:")}
    return NetworkConfig(
        min_head=0.0,
        min_head_overrides={j.id: j.min_head for j in net.junctions},
        option_tables=tables,
        pipe_tables={p.id: p.table for p in net.pipes if p.table in tables},
    )

