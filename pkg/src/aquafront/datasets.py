"""Bundled desk-scale instances."""

from __future__ import annotations

from importlib import resources
from pathlib import Path

from .network import PipeNetwork, load_network

BUNDLED = ("one_pipe", "tiny3", "twoloop8")


def bundled_paths(name: str) -> tuple[Path, Path]:
    """(INP path, JSON config path) of a bundled instance."""
    if name not in BUNDLED:
        raise KeyError(f"no bundled network {name!r}; have {', '.join(BUNDLED)}")
    root = Path(str(resources.files("aquafront") / "data"))
    return root / f"{name}.inp", root / f"{name}.json"


def bundled_network(name: str) -> PipeNetwork:
    return load_network(*bundled_paths(name))
