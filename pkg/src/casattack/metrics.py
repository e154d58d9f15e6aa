"""Vulnerability and resilience scores, and the attack-classification catalog."""

from __future__ import annotations

import json
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache
from importlib import resources
from typing import Iterable

from .errors import MixedUnitsError, NotInCatalogError


class Marker(str, Enum):
    """Results that are not numbers: no successful attack was found."""

    UNDEFINED = "undefined"
    INFINITE = "infinite"

    def __str__(self) -> str:
        return self.value


UNDEFINED = Marker.UNDEFINED
INFINITE = Marker.INFINITE


@dataclass(frozen=True)
class AttackOutcome:
    """One attack attempt. ``cost`` is the adversarial cost, at least 1."""

    cost: float
    impact: float = 0.0
    success: bool = True
    unit: str = "actions"

    def __post_init__(self):
        if not self.cost >= 1:
            raise ValueError(f"adversarial cost must be >= 1, got {self.cost}")


def _successful(outcomes: Iterable[AttackOutcome]) -> list[AttackOutcome]:
    outcomes = list(outcomes)
    units = {o.unit for o in outcomes}
    if len(units) > 1:
        raise MixedUnitsError(f"outcomes mix cost units {sorted(units)}")
    return [o for o in outcomes if o.success]


def resilience(outcomes: Iterable[AttackOutcome]) -> float | Marker:
    """Cheapest successful attack cost, or ``INFINITE`` when nothing succeeded."""
    wins = _successful(outcomes)
    if not wins:
        return INFINITE
    return min(o.cost for o in wins)


def vulnerability(outcomes: Iterable[AttackOutcome]) -> float | Marker:
    """``1 / resilience``; ``UNDEFINED`` (not 0) when nothing succeeded."""
    r = resilience(outcomes)
    if r is INFINITE:
        return UNDEFINED
    return 1.0 / r


def score_json(value) -> float | str:
    return str(value) if isinstance(value, Marker) else value


# --- classification -----------------------------------------------------

SURFACES = ("NetworkStructure", "CooperationProtocols", "ActuationFunctions")
CIA = ("C", "I", "A")
DDDAS = ("S", "IS", "AN", "SC")
TYPES = ("Active", "Passive")
MODES = ("State", "Dynamics", "StateAndDynamics", "NA")


@dataclass(frozen=True)
class AttackClassification:
    name: str
    surface: str
    cia: frozenset[str]
    dddas: frozenset[str]
    type: str
    mode: str

    def __post_init__(self):
        if self.surface not in SURFACES:
            raise ValueError(f"unknown functional surface {self.surface!r}")
        if not self.cia <= set(CIA) or not self.dddas <= set(DDDAS):
            raise ValueError("unknown CIA or DDDAS label")
        if self.type not in TYPES or self.mode not in MODES:
            raise ValueError("unknown attack type or mode")
        if self.type == "Passive" and self.mode != "NA":
            raise ValueError("passive attacks have no mode")

    def to_dict(self) -> dict:
        return {"name": self.name, "surface": self.surface,
                "cia": sorted(self.cia, key=CIA.index),
                "dddas": sorted(self.dddas, key=DDDAS.index),
                "type": self.type, "mode": self.mode}


def _norm(name: str) -> str:
    return " ".join(name.lower().split())


@lru_cache(maxsize=1)
def catalog() -> tuple[int, tuple[AttackClassification, ...], dict]:
    """``(version, rows, name index)`` from the packaged catalog file."""
    raw = json.loads(resources.files("casattack").joinpath("data")
                     .joinpath("attack_catalog.json").read_text(encoding="utf-8"))
    rows = []
    index = {}
    for entry in raw["attacks"]:
        row = AttackClassification(entry["name"], entry["surface"], frozenset(entry["cia"]),
                                   frozenset(entry["dddas"]), entry["type"], entry["mode"])
        rows.append(row)
        for n in [entry["name"], *entry.get("aliases", [])]:
            index[_norm(n)] = row
    return int(raw["version"]), tuple(rows), index


def classify(attack_name: str) -> AttackClassification:
    """Catalog lookup by name or alias; case and spacing are ignored."""
    _, _, index = catalog()
    try:
        return index[_norm(attack_name)]
    except KeyError:
        raise NotInCatalogError(f"{attack_name!r} is not in the attack catalog") from None
