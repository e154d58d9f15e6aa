"""Line-overload cascade model on a bus/line power grid.

A line stays alive while its load is strictly below its capacity. When a
line fails, its load is split equally among the alive lines sharing one of
its end buses; lines pushed to or over capacity fail in the next round.
Rounds are synchronous: every overload is detected against the state at
the start of the round and all failed loads are redistributed together.
Load with nowhere to go is shed and reported.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path

from .errors import IntegrityError, InvalidActionError

DEFAULT_LOADING = 0.75
COLLAPSE_THRESHOLD = 8

_RTS79_SHA256 = {
    "bus.csv": "a42f7ebf4501201ea6d4894a7cc0dbb4564b0c542dc784c8c255eb75fafc70a6",
    "line.csv": "3f8d1b94831aee3c38a8b38cc8212f517f1b8ec844bd61093d052a18b5162be1",
}


@dataclass(frozen=True)
class Bus:
    id: int
    type: str
    gen_mw: float
    demand_mw: float


@dataclass(frozen=True)
class Line:
    id: int
    from_bus: int
    to_bus: int
    capacity: float
    load: float
    alive: bool = True


@dataclass(frozen=True)
class PowerGrid:
    buses: tuple[Bus, ...]
    lines: tuple[Line, ...]
    shed_mw: float = 0.0

    def __post_init__(self):
        ids = [b.id for b in self.buses]
        if len(set(ids)) != len(ids):
            raise ValueError("bus ids must be unique")
        known = set(ids)
        line_ids = [ln.id for ln in self.lines]
        if len(set(line_ids)) != len(line_ids):
            raise ValueError("line ids must be unique")
        for ln in self.lines:
            if ln.capacity <= 0:
                raise ValueError(f"line {ln.id} has non-positive capacity")
            if ln.from_bus not in known or ln.to_bus not in known:
                raise ValueError(f"line {ln.id} references an unknown bus")
            if ln.alive and ln.load < 0:
                raise ValueError(f"line {ln.id} has negative load")
        object.__setattr__(self, "_index", {ln.id: k for k, ln in enumerate(self.lines)})

    def line(self, line_id: int) -> Line:
        try:
            return self.lines[self._index[line_id]]
        except KeyError:
            raise InvalidActionError(f"no line {line_id}") from None

    @property
    def alive_ids(self) -> list[int]:
        return [ln.id for ln in self.lines if ln.alive]

    @property
    def failed_ids(self) -> list[int]:
        return [ln.id for ln in self.lines if not ln.alive]

    @property
    def total_load(self) -> float:
        return sum(ln.load for ln in self.lines if ln.alive)

    @property
    def total_generation(self) -> float:
        return sum(b.gen_mw for b in self.buses)

    @property
    def total_demand(self) -> float:
        return sum(b.demand_mw for b in self.buses)

    @property
    def load_buses(self) -> list[int]:
        return [b.id for b in self.buses if b.demand_mw > 0]

    @property
    def generator_buses(self) -> list[int]:
        return [b.id for b in self.buses if b.gen_mw > 0]


@dataclass
class CascadeResult:
    direct: list[int]
    cascaded: list[int] = field(default_factory=list)
    cascade_rounds: list[list[int]] = field(default_factory=list)
    rounds: int = 0
    shed_mw: float = 0.0
    surviving_load_fraction: float = 1.0
    collapsed: bool = False

    def to_dict(self) -> dict:
        return {
            "direct": list(self.direct),
            "cascaded": list(self.cascaded),
            "cascade_rounds": [list(r) for r in self.cascade_rounds],
            "rounds": self.rounds,
            "shed_mw": self.shed_mw,
            "surviving_load_fraction": self.surviving_load_fraction,
            "collapsed": self.collapsed,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


def _read_csv(text: str) -> list[dict]:
    return list(csv.DictReader(io.StringIO(text)))


def grid_from_csv(bus_text: str, line_text: str, loading: float = DEFAULT_LOADING) -> PowerGrid:
    buses = tuple(
        Bus(int(r["id"]), r["type"].strip(), float(r["gen_mw"]), float(r["demand_mw"]))
        for r in _read_csv(bus_text)
    )
    lines = []
    for r in _read_csv(line_text):
        cap = float(r["capacity_mw"])
        lines.append(Line(int(r["id"]), int(r["from"]), int(r["to"]), cap, loading * cap))
    return PowerGrid(buses, tuple(lines))


def load_grid(bus_csv, line_csv, loading: float = DEFAULT_LOADING) -> PowerGrid:
    """Load a custom grid from ``bus.csv`` / ``line.csv`` files; lines start at ``loading * capacity``."""
    return grid_from_csv(Path(bus_csv).read_text(encoding="utf-8"),
                         Path(line_csv).read_text(encoding="utf-8"), loading)


def _embedded(name: str) -> str:
    data = resources.files("casattack").joinpath("data").joinpath("rts79").joinpath(name).read_bytes()
    if hashlib.sha256(data).hexdigest() != _RTS79_SHA256[name]:
        raise IntegrityError(f"embedded RTS-79 file {name} failed its checksum")
    return data.decode("utf-8")


def load_rts79(loading: float = DEFAULT_LOADING) -> PowerGrid:
    """IEEE RTS-79: 24 buses, 38 lines, 3405 MW generation, 2850 MW peak demand.

    Line capacities are the published continuous ratings; every line starts
    loaded at ``loading`` times its capacity.
    """
    if not 0 <= loading:
        raise ValueError("loading factor must be non-negative")
    return grid_from_csv(_embedded("bus.csv"), _embedded("line.csv"), loading)


def _incident(grid_lines: dict[int, Line]) -> dict[int, set[int]]:
    by_bus: dict[int, set[int]] = {}
    for ln in grid_lines.values():
        by_bus.setdefault(ln.from_bus, set()).add(ln.id)
        by_bus.setdefault(ln.to_bus, set()).add(ln.id)
    return by_bus


def trip_line(grid: PowerGrid, line_id: int,
              collapse_threshold: int = COLLAPSE_THRESHOLD) -> tuple[PowerGrid, CascadeResult]:
    """Fail ``line_id`` and run the overload cascade to its fixed point."""
    target = grid.line(line_id)
    if not target.alive:
        raise InvalidActionError(f"line {line_id} already failed")

    lines = {ln.id: ln for ln in grid.lines}
    by_bus = _incident(lines)
    load = {k: ln.load for k, ln in lines.items()}
    alive = {k for k, ln in lines.items() if ln.alive}
    before = sum(load[k] for k in alive)
    shed = 0.0

    result = CascadeResult(direct=[line_id])
    failing = [line_id]
    while failing and alive:
        result.rounds += 1
        alive.difference_update(failing)
        transfers: dict[int, float] = {}
        for k in failing:
            ln = lines[k]
            recipients = sorted((by_bus[ln.from_bus] | by_bus[ln.to_bus]) & alive)
            if recipients:
                share = load[k] / len(recipients)
                for r in recipients:
                    transfers[r] = transfers.get(r, 0.0) + share
            else:
                shed += load[k]
            load[k] = 0.0
        for r in sorted(transfers):
            load[r] += transfers[r]
        failing = sorted(k for k in alive if load[k] >= lines[k].capacity)
        if failing:
            result.cascaded.extend(failing)
            result.cascade_rounds.append(failing)

    new_lines = tuple(replace(ln, load=load[ln.id], alive=ln.id in alive) for ln in grid.lines)
    settled = PowerGrid(grid.buses, new_lines, grid.shed_mw + shed)
    result.shed_mw = shed
    result.surviving_load_fraction = (before - shed) / before if before > 0 else 1.0
    result.collapsed = is_collapsed(settled, collapse_threshold)
    return settled, result


def failed_line_count(grid: PowerGrid) -> int:
    return sum(1 for ln in grid.lines if not ln.alive)


def is_collapsed(grid: PowerGrid, threshold: int = COLLAPSE_THRESHOLD) -> bool:
    return failed_line_count(grid) >= threshold
