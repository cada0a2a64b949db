"""Bundled example contracts, each with a matching ``<name>.scenario.json``."""

from __future__ import annotations

from pathlib import Path

from ..events import Scenario
from ..lang import ContractDef, parse

ROOT = Path(__file__).resolve().parent


def names() -> list[str]:
    return sorted(p.stem for p in ROOT.glob("*.fsol"))


def contract_path(name: str) -> Path:
    return ROOT / f"{name}.fsol"


def scenario_path(name: str) -> Path:
    return ROOT / f"{name}.scenario.json"


def load(name: str) -> tuple[ContractDef, Scenario]:
    path = contract_path(name)
    if not path.exists():
        raise FileNotFoundError(f"no bundled contract named {name!r}")
    return parse(path.read_text()), Scenario.load(scenario_path(name))
