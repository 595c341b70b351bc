"""Command-line entry point: ``aquafront run|compare|validate``.

Exit codes: 0 success, 2 configuration/usage error, 3 parse or validation
error, 4 runtime failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import subprocess
import sys
from pathlib import Path

from . import __version__
from .errors import AquafrontError, ConfigInvalid, InputNotAFront, IoFailure, ParseError
from .metrics import atomic_write, compare_fronts, export_front, front_csv, read_front_csv, validate_front
from .network import NetworkConfig, load_config, load_network, parse_cost_table
from .nsga2 import OperatorParams
from .objectives import evaluate_indices
from .orchestrator import PRESETS, RunConfig, run_all, run_seed

EXIT_OK, EXIT_CONFIG, EXIT_PARSE, EXIT_RUNTIME = 0, 2, 3, 4

log = logging.getLogger("aquafront")


class UsageError(Exception):
    pass


def _network_config(args) -> NetworkConfig:
    if args.costs is None:
        cfg = NetworkConfig()
    elif args.costs.endswith(".json"):
        cfg = load_config(args.costs)
    else:
        table = parse_cost_table(Path(args.costs).read_text(encoding="utf-8"))
        cfg = NetworkConfig(option_tables={"costs": table}, default_table="costs")
    if getattr(args, "units", None):
        cfg.units = args.units
    if getattr(args, "min_head", None) is not None:
        cfg.min_head = args.min_head
    return cfg


def _widths(text: str) -> tuple[float, float]:
    try:
        parts = tuple(float(x) for x in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError("cell widths must be two comma-separated numbers")
    if len(parts) != 2:
        raise argparse.ArgumentTypeError("cell widths must be two comma-separated numbers")
    return parts


def _git_describe() -> str:
    try:
        out = subprocess.run(
            ["git", "describe", "--always", "--dirty", "--tags"],
            cwd=Path(__file__).parent,
            capture_output=True,
            text=True,
            timeout=5,
        )
    except (OSError, subprocess.SubprocessError):
        return __version__
    return f"{__version__}+{out.stdout.strip()}" if out.returncode == 0 and out.stdout.strip() else __version__


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="aquafront", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def network_args(p):
        p.add_argument("--network", required=True, help="INP file")
        p.add_argument("--costs", help="cost-table CSV applied to every pipe, or a JSON network config")
        p.add_argument("--units", help="flow units of the INP file (CMS, LPS, GPM, ...)")
        p.add_argument("--min-head", type=float, help="minimum pressure head (m) at every junction")

    run = sub.add_parser("run", help="optimize a network with scheme A, B, C or D")
    network_args(run)
    run.add_argument("--preset", choices=sorted(PRESETS))
    run.add_argument("--scheme", choices=["A", "B", "C", "D"], default="A")
    run.add_argument("--pop", type=int)
    run.add_argument("--gens", type=int)
    run.add_argument("--runs", type=int)
    run.add_argument("--nlink", type=int)
    run.add_argument("--seed", type=int)
    run.add_argument("--out", required=True, help="output directory")
    run.add_argument("--ls-start", type=int, default=1000)
    run.add_argument("--ls-dense-until", type=int, default=5000)
    run.add_argument("--ls-dense-period", type=int, default=100)
    run.add_argument("--ls-sparse-period", type=int, default=1000)
    run.add_argument("--ls-sample", type=float, default=1.0)
    run.add_argument("--coupling-start", type=int, default=1000)
    run.add_argument("--cell-widths", type=_widths)
    run.add_argument("--max-occupancy", type=int, default=64)
    run.add_argument("--jobs", type=int, default=os.cpu_count() or 1)
    run.add_argument("--svg", action="store_true", help="also write front.svg")

    cmp_ = sub.add_parser("compare", help="compare two front CSV files")
    cmp_.add_argument("--pf1", required=True)
    cmp_.add_argument("--pf2", required=True)
    cmp_.add_argument("--tol", type=float, default=1e-9)
    cmp_.add_argument("--match", choices=["objective", "decision"], default="objective")
    cmp_.add_argument("--out")

    val = sub.add_parser("validate", help="parse a network and optionally evaluate one design")
    network_args(val)
    val.add_argument("--design", help="comma-separated option indices, one per decision pipe")
    return parser


def run_config_from_args(args, net_cfg: NetworkConfig) -> RunConfig:
    preset_name = args.preset or net_cfg.preset
    if preset_name is not None and preset_name not in PRESETS:
        raise ConfigInvalid(f"unknown preset {preset_name!r}")
    preset = PRESETS.get(preset_name, {}) if preset_name else {}
    seed = args.seed
    if seed is None:
        env = os.environ.get("AQUAFRONT_SEED")
        try:
            seed = int(env) if env else 0
        except ValueError:
            raise ConfigInvalid(f"AQUAFRONT_SEED must be an integer, got {env!r}")

    def pick(flag, key, fallback):
        return flag if flag is not None else preset.get(key, fallback)

    return RunConfig(
        scheme=args.scheme,
        pop_size=pick(args.pop, "pop_size", 200),
        n_gen=pick(args.gens, "n_gen", 10_000),
        n_runs=pick(args.runs, "n_runs", 30),
        operators=OperatorParams(),
        n_link=pick(args.nlink, "n_link", 100),
        ls_start=args.ls_start,
        ls_dense_until=args.ls_dense_until,
        ls_dense_period=args.ls_dense_period,
        ls_sparse_period=args.ls_sparse_period,
        ls_sample=args.ls_sample,
        coupling_start=args.coupling_start,
        cell_widths=args.cell_widths or net_cfg.cell_widths,
        max_occupancy=args.max_occupancy,
        seed=seed,
    ).validate()


def cmd_run(args) -> int:
    net_cfg = _network_config(args)
    net = load_network(args.network, net_cfg)
    config = run_config_from_args(args, net_cfg)
    if args.jobs < 1:
        raise ConfigInvalid("--jobs must be at least 1")
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    log.info("%s", net.summary())
    result = run_all(config, net, jobs=args.jobs)
    if result.merged_nd_set:
        export_front(result.merged_nd_set, "csv", out / "front.csv")
        if args.svg:
            export_front(result.merged_nd_set, "svg", out / "front.svg", title=net.title)
    else:
        atomic_write(out / "front.csv", front_csv([]))
    manifest = {
        "version": _git_describe(),
        "network": str(args.network),
        "costs": args.costs,
        "config": config.to_dict(),
        "run_seeds": [run_seed(config.seed, i) for i in range(config.n_runs)],
    }
    stats = {
        "fe_total": result.fe_total,
        "front_size": len(result.merged_nd_set),
        "runs": [vars(s) for s in result.runs],
    }
    atomic_write(out / "manifest.json", json.dumps(manifest, indent=2) + "\n")
    atomic_write(out / "stats.json", json.dumps(stats, indent=2) + "\n")
    print(f"{len(result.merged_nd_set)} non-dominated solutions, {result.fe_total} evaluations -> {out}")
    return EXIT_OK


def cmd_compare(args) -> int:
    fronts = []
    for path in (args.pf1, args.pf2):
        rows = read_front_csv(path)
        try:
            validate_front([r[:2] for r in rows])
        except InputNotAFront as exc:
            row = f" (data row {exc.row + 1})" if exc.row is not None else ""
            print(f"error: {path}{row}: {exc}", file=sys.stderr)
            return EXIT_PARSE
        fronts.append(rows)
    report = compare_fronts(
        [r[:2] for r in fronts[0]],
        [r[:2] for r in fronts[1]],
        tol=args.tol,
        match=args.match,
        designs1=[r[2] for r in fronts[0]],
        designs2=[r[2] for r in fronts[1]],
    )
    text = json.dumps(report.to_dict(), indent=2) + "\n"
    if args.out:
        atomic_write(args.out, text)
    sys.stdout.write(text)
    return EXIT_OK


def cmd_validate(args) -> int:
    net = load_network(args.network, _network_config(args))
    print(net.summary())
    if args.design is None:
        return EXIT_OK
    try:
        design = [int(x) for x in args.design.split(",") if x.strip()]
    except ValueError:
        raise UsageError("--design must be comma-separated integers")
    if len(design) != net.n_real:
        raise UsageError(f"--design needs {net.n_real} indices, got {len(design)}")
    if any(not 0 <= d < k for d, k in zip(design, net.option_counts)):
        raise UsageError("--design index outside its option table")
    ev = evaluate_indices(net, design)
    print(f"cost {ev.cost:.17g}")
    print(f"resilience {ev.resilience:.17g}")
    print(f"feasible {str(ev.feasible).lower()}")
    print(f"total_head_deficit {ev.total_head_deficit:.17g}")
    return EXIT_OK


COMMANDS = {"run": cmd_run, "compare": cmd_compare, "validate": cmd_validate}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return COMMANDS[args.command](args)
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ConfigInvalid, UsageError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ParseError, InputNotAFront) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except (AquafrontError, IoFailure, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
