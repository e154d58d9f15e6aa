"""Scenario configuration, seeded repetitions and result persistence.

A scenario file is YAML with three sections, ``target``, ``adversary`` and
``output``, plus top-level ``kind``, ``seed``, ``repetitions`` and
``workers``. Unknown keys anywhere are rejected.

Repetition ``i`` is seeded with ``derive_seed(master, i)``, a splitmix64
finaliser applied to ``master + (i + 1) * 0x9E3779B97F4A7C15`` (mod 2**64).
"""

from __future__ import annotations

import copy
import json
import math
import os
import tempfile
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

import networkx as nx
import numpy as np
import yaml

from .adversary import (FormationTarget, GraphRemovalTarget, GridTarget,
                        run_attack_loop)
from .adversary.induction import Corridor, mirror_budget, policy_induction_experiment, self_budget
from .adversary.qlearning import ExplorationSchedule
from .dynamics import BOUNDARY, DynamicalSystem, estimate_basins
from .errors import ConfigError
from .game import FormationGame
from .graph import (Graph, betweenness_ranking, brokerage_ranking, read_edge_list,
                    targeted_removal)
from .grid import load_grid, load_rts79
from .metrics import AttackOutcome, resilience, score_json, vulnerability

KINDS = ("grid-cascade", "net-fragmentation", "formation-destabilize", "policy-induction",
         "dynamics-demo")
OUTPUT_ENV = "CASATTACK_OUTPUT_ROOT"
RESULT_FILE = "result.json"
SUMMARY_FILE = "summary.json"

_MASK = (1 << 64) - 1


def derive_seed(master: int, index: int) -> int:
    z = (master + (index + 1) * 0x9E3779B97F4A7C15) & _MASK
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
    return z ^ (z >> 31)


# --- defaults per kind ------------------------------------------------------

_ADVERSARY_COMMON = {
    "discount": 0.9, "alpha": 0.1, "exploration": {"initial": 1.0, "floor": 0.05, "step": None},
    "planning_episodes": 20, "cap": 500, "objective": None, "episode_budget": None,
    "whitebox": False, "warm_start": True, "continue_after_success": False,
}

_DEFAULTS = {
    "grid-cascade": {
        "repetitions": 100,
        "target": {"loading": 0.75, "bus_csv": None, "line_csv": None},
        "adversary": {"objective": 8, "episode_budget": 5,
                      "reward": {"cascade_gain": 1.0, "trip_cost": 1.0, "goal_bonus": 10.0}},
    },
    "net-fragmentation": {
        "repetitions": 50,
        "target": {"graph": {"generator": "barabasi-albert", "n": 30, "m": 2, "p": 0.1,
                             "edge_list": None, "directed": False},
                   "baselines": ["betweenness", "brokerage"]},
        "adversary": {"objective": 0.5, "cap": 4, "episode_budget": 4, "whitebox": True,
                      "planning_episodes": 5000, "alpha": 1.0, "reward": "level"},
    },
    "formation-destabilize": {
        "repetitions": 20,
        "target": {"game": {"preset": "star", "players": 8, "features": None, "theta": [-2.0],
                            "intercept": 1.0, "shock_scale": 0.3, "theta_reciprocity": 0.5,
                            "theta_common": 0.0, "weights": [1.0], "max_rounds": 100}},
        "adversary": {"objective": 0.5, "cap": 20, "episode_budget": 3, "whitebox": True,
                      "planning_episodes": 200, "alpha": 1.0},
    },
    "policy-induction": {
        "repetitions": 20,
        "target": {"corridor": {"length": 22, "start": None, "horizon": None},
                   "budget": "mirror", "epochs": 200, "episodes_per_epoch": 10,
                   "explore_fraction": 0.5, "adversary_episodes": 2000},
        "adversary": {"objective": 0.9, "discount": 0.95, "alpha": 0.05},
    },
    "dynamics-demo": {
        "repetitions": 1,
        "target": {"system": "double-well", "bounds": [[-2.0, 2.0]], "resolution": [81],
                   "horizon": 20.0, "tol": 1e-6, "dt": 0.01},
        "adversary": {},
    },
}

_TOP_KEYS = {"kind", "seed", "repetitions", "workers", "target", "adversary", "output", "name"}
_OUTPUT_KEYS = {"directory"}


def _merge(base: dict, extra: dict, path: str) -> dict:
    """Recursive merge of ``extra`` into a copy of ``base``; unknown keys are fatal."""
    out = copy.deepcopy(base)
    for key, value in extra.items():
        where = f"{path}.{key}" if path else key
        if key not in base:
            raise ConfigError(f"unknown key {key!r} at {where}", field=where)
        if isinstance(base[key], dict):
            if not isinstance(value, dict):
                raise ConfigError(f"{where} must be a mapping", field=where)
            out[key] = _merge(base[key], value, where)
        else:
            out[key] = value
    return out


@dataclass
class ScenarioConfig:
    kind: str
    target: dict
    adversary: dict
    repetitions: int = 100
    seed: int = 0
    workers: int = 1
    output: str = "results"
    name: str = ""
    source: str | None = field(default=None, compare=False)

    def to_dict(self) -> dict:
        return {"kind": self.kind, "name": self.name, "seed": self.seed,
                "repetitions": self.repetitions, "workers": self.workers,
                "target": self.target, "adversary": self.adversary,
                "output": {"directory": self.output}}

    @property
    def output_dir(self) -> Path:
        root = os.environ.get(OUTPUT_ENV)
        out = Path(self.output)
        return Path(root) / out if root and not out.is_absolute() else out


def _require(cond: bool, message: str, where: str):
    if not cond:
        raise ConfigError(message, field=where)


def config_from_dict(raw: dict, base_dir: Path | None = None) -> ScenarioConfig:
    if not isinstance(raw, dict):
        raise ConfigError("scenario file must be a mapping at the top level")
    for key in raw:
        if key not in _TOP_KEYS:
            raise ConfigError(f"unknown key {key!r}", field=str(key))
    kind = raw.get("kind")
    _require(kind in KINDS, f"kind must be one of {', '.join(KINDS)}; got {kind!r}", "kind")
    defaults = _DEFAULTS[kind]
    adversary_base = _merge(_ADVERSARY_COMMON, {k: v for k, v in defaults["adversary"].items()
                                                if k in _ADVERSARY_COMMON}, "adversary")
    adversary_base.update({k: v for k, v in defaults["adversary"].items()
                           if k not in _ADVERSARY_COMMON})
    target = _merge(defaults["target"], raw.get("target") or {}, "target")
    adversary = _merge(adversary_base, raw.get("adversary") or {}, "adversary")
    output = raw.get("output") or {}
    if not isinstance(output, dict):
        raise ConfigError("output must be a mapping", field="output")
    for key in output:
        if key not in _OUTPUT_KEYS:
            raise ConfigError(f"unknown key {key!r} at output.{key}", field=f"output.{key}")

    reps = raw.get("repetitions", defaults["repetitions"])
    _require(isinstance(reps, int) and not isinstance(reps, bool) and reps >= 1,
             "repetitions must be an integer >= 1", "repetitions")
    seed = raw.get("seed", 0)
    _require(isinstance(seed, int) and not isinstance(seed, bool) and seed >= 0,
             "seed must be a non-negative integer", "seed")
    workers = raw.get("workers", 1)
    _require(isinstance(workers, int) and workers >= 1, "workers must be >= 1", "workers")

    cfg = ScenarioConfig(kind, target, adversary, reps, seed, workers,
                         str(output.get("directory", f"results/{kind}")), str(raw.get("name", "")))
    _validate(cfg, base_dir or Path.cwd())
    return cfg


def _validate(cfg: ScenarioConfig, base_dir: Path) -> None:
    a = cfg.adversary
    if cfg.kind != "dynamics-demo":
        obj = a.get("objective")
        _require(isinstance(obj, (int, float)) and math.isfinite(obj),
                 "objective must be a finite number", "adversary.objective")
    if cfg.kind in ("grid-cascade", "net-fragmentation", "formation-destabilize"):
        _require(0 <= a["discount"] < 1, "discount must lie in [0, 1)", "adversary.discount")
        _require(0 < a["alpha"] <= 1, "alpha must lie in (0, 1]", "adversary.alpha")
        _require(isinstance(a["cap"], int) and a["cap"] >= 1, "cap must be an integer >= 1",
                 "adversary.cap")
        _require(isinstance(a["planning_episodes"], int) and a["planning_episodes"] >= 1,
                 "planning_episodes must be >= 1", "adversary.planning_episodes")
        ex = a["exploration"]
        _require(0 <= ex["floor"] <= ex["initial"] <= 1, "need 0 <= floor <= initial <= 1",
                 "adversary.exploration")
    t = cfg.target
    if cfg.kind == "grid-cascade":
        _require(t["loading"] >= 0, "loading must be >= 0", "target.loading")
        _require((t["bus_csv"] is None) == (t["line_csv"] is None),
                 "give both bus_csv and line_csv or neither", "target.bus_csv")
        for key in ("bus_csv", "line_csv"):
            if t[key] is not None:
                p = (base_dir / t[key]).resolve()
                _require(p.is_file(), f"file not found: {t[key]}", f"target.{key}")
                t[key] = str(p)
    elif cfg.kind == "net-fragmentation":
        g = t["graph"]
        if g["edge_list"] is not None:
            p = (base_dir / g["edge_list"]).resolve()
            _require(p.is_file(), f"file not found: {g['edge_list']}", "target.graph.edge_list")
            g["edge_list"] = str(p)
        else:
            _require(g["generator"] in ("barabasi-albert", "erdos-renyi"),
                     "generator must be barabasi-albert or erdos-renyi", "target.graph.generator")
        for b in t["baselines"]:
            _require(b in ("betweenness", "brokerage"), f"unknown baseline {b!r}",
                     "target.baselines")
    elif cfg.kind == "policy-induction":
        _require(t["budget"] in ("mirror", "self"), "budget must be mirror or self",
                 "target.budget")
        _require(isinstance(t["epochs"], int) and t["epochs"] >= 2, "epochs must be >= 2",
                 "target.epochs")
    elif cfg.kind == "formation-destabilize":
        _require(t["game"]["preset"] in (None, "star"), "preset must be star or empty",
                 "target.game.preset")
        _require(t["game"]["players"] >= 2, "need at least two players", "target.game.players")


def load_config(path) -> ScenarioConfig:
    """Parse and validate a YAML scenario file."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from None
    try:
        raw = yaml.safe_load(text)
    except yaml.MarkedYAMLError as exc:
        mark = exc.problem_mark
        line, col = (mark.line + 1, mark.column + 1) if mark else (None, None)
        raise ConfigError(f"{path}: {exc.problem}", line=line, column=col) from None
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    cfg = config_from_dict(raw or {}, path.parent)
    cfg.source = str(path)
    return cfg


# --- repetitions --------------------------------------------------------------

def _exploration(a: dict, horizon: int) -> ExplorationSchedule:
    ex = a["exploration"]
    if ex["step"] is None:
        return ExplorationSchedule.over(horizon, ex["initial"], ex["floor"])
    return ExplorationSchedule(ex["initial"], ex["step"], ex["floor"])


def _loop(target, a: dict, rng) -> dict:
    mdp = target.mdp(a["objective"], a["discount"])
    report = run_attack_loop(
        target, mdp, cap=a["cap"], planning_episodes=a["planning_episodes"], rng=rng,
        whitebox=a["whitebox"], episode_budget=a["episode_budget"], warm_start=a["warm_start"],
        continue_after_success=a["continue_after_success"], alpha=a["alpha"],
        exploration=_exploration(a, a["cap"]))
    return report.to_dict()


def _grid_rep(cfg: ScenarioConfig, seed: int) -> dict:
    t, a = cfg.target, cfg.adversary
    if t["bus_csv"]:
        grid = load_grid(t["bus_csv"], t["line_csv"], t["loading"])
    else:
        grid = load_rts79(t["loading"])
    target = GridTarget(grid, int(a["objective"]), **a["reward"])
    return _loop(target, a, np.random.default_rng(seed))


def make_graph(spec: dict, seed: int) -> Graph:
    if spec["edge_list"]:
        return read_edge_list(spec["edge_list"], directed=spec["directed"])
    if spec["generator"] == "barabasi-albert":
        g = nx.barabasi_albert_graph(spec["n"], spec["m"], seed=seed % (2 ** 32))
    else:
        g = nx.erdos_renyi_graph(spec["n"], spec["p"], seed=seed % (2 ** 32))
    return Graph.from_edges(g.edges(), nodes=g.nodes())


def _fragmentation_rep(cfg: ScenarioConfig, seed: int) -> dict:
    t, a = cfg.target, cfg.adversary
    g = make_graph(t["graph"], seed)
    target = GraphRemovalTarget(g, reward=a["reward"])
    out = _loop(target, a, np.random.default_rng(seed))
    steps = a["episode_budget"] or a["cap"]
    rankings = {"betweenness": betweenness_ranking, "brokerage": brokerage_ranking}
    out["baselines"] = {name: [[int(v), f] for v, f in targeted_removal(g, rankings[name], steps)]
                        for name in t["baselines"]}
    out["graph"] = {"nodes": g.n, "edges": len(g.edges), "seed": seed,
                    "generator": None if t["graph"]["edge_list"] else t["graph"]["generator"]}
    return out


def star_game(players: int) -> FormationGame:
    """Player 0 values links to and from everyone; leaves only value the hub."""
    v = -np.ones((players, players))
    v[0, :] = 1.0
    v[:, 0] = 1.0
    np.fill_diagonal(v, 0.0)
    return FormationGame(tuple(range(players)), v, np.zeros_like(v))


def _formation_rep(cfg: ScenarioConfig, seed: int) -> dict:
    t, a = cfg.target, cfg.adversary
    gs = t["game"]
    if gs["preset"] == "star":
        game = star_game(gs["players"])
    else:
        rng = np.random.default_rng(seed)
        feats = gs["features"] if gs["features"] is not None else rng.random((gs["players"], len(gs["theta"])))
        game = FormationGame.from_features(
            feats, gs["theta"], seed=seed, shock_scale=gs["shock_scale"],
            theta_reciprocity=gs["theta_reciprocity"], theta_common=gs["theta_common"],
            weights=tuple(gs["weights"]), intercept=gs["intercept"])
    target = FormationTarget(game, max_rounds=gs["max_rounds"])
    return _loop(target, a, np.random.default_rng(seed))


def _induction_rep(cfg: ScenarioConfig, seed: int) -> dict:
    t, a = cfg.target, cfg.adversary
    env = Corridor(**t["corridor"])
    budget = mirror_budget(env) if t["budget"] == "mirror" else self_budget(env)
    res = policy_induction_experiment(
        env, budget, t["epochs"], seed, episodes_per_epoch=t["episodes_per_epoch"],
        adversary_episodes=t["adversary_episodes"], discount=a["discount"], alpha=a["alpha"],
        explore_fraction=t["explore_fraction"])
    success = bool(res.final_half_below() and res.agreement >= a["objective"])
    return {
        "seed": seed, "scenario": cfg.kind, "success": success,
        "reason": "objective" if success else "cap",
        "agreement": res.agreement, "clean_agreement": res.clean_agreement,
        "final_half_below": res.final_half_below(),
        "unperturbed": res.unperturbed.tolist(), "perturbed": res.perturbed.tolist(),
        "divergence_epoch": res.divergence_epoch,
        "success_cost": res.divergence_epoch if success else None, "cost_unit": "epochs",
        "target_policy": {str(k): v for k, v in res.target_policy.items()},
    }


def double_well(x, beta):
    return x - x ** 3 + beta[0]


def _dynamics_rep(cfg: ScenarioConfig, seed: int) -> dict:
    t = cfg.target
    system = DynamicalSystem(len(t["bounds"]), double_well, vectorized=True)
    bm = estimate_basins(system, t["bounds"], t["resolution"], t["horizon"], t["tol"], t["dt"])
    centres = bm.cell_centers(0)
    return {
        "seed": seed, "scenario": cfg.kind, "success": True, "reason": "objective",
        "attractors": [a.tolist() for a in bm.attractors],
        "labels": bm.labels.tolist(), "centres": centres.tolist(),
        "boundary": [float(centres[i[0]]) for i in sorted(bm.boundary)],
        "success_cost": None, "cost_unit": "",
        "boundary_label": BOUNDARY,
    }


_RUNNERS = {
    "grid-cascade": _grid_rep,
    "net-fragmentation": _fragmentation_rep,
    "formation-destabilize": _formation_rep,
    "policy-induction": _induction_rep,
    "dynamics-demo": _dynamics_rep,
}


def run_repetition(cfg: ScenarioConfig, index: int) -> dict:
    """One repetition; failures are caught and recorded rather than raised."""
    seed = derive_seed(cfg.seed, index)
    try:
        out = _RUNNERS[cfg.kind](cfg, seed)
    except Exception as exc:  # one bad repetition must not sink the rest
        out = {"success": False, "reason": "INCOMPLETE", "error": f"{type(exc).__name__}: {exc}"}
    out["index"] = index
    out["seed"] = seed
    out["scenario"] = cfg.kind
    return out


def _run_indexed(args):
    cfg_dict, index = args
    return run_repetition(config_from_dict(cfg_dict), index)


@dataclass
class ExperimentResult:
    config: ScenarioConfig
    reports: list[dict]
    aggregates: dict
    wall_clock: float = 0.0

    @property
    def failures(self) -> list[int]:
        return [r["index"] for r in self.reports if r.get("reason") == "INCOMPLETE"]

    @property
    def successes(self) -> list[dict]:
        return [r for r in self.reports if r.get("success")]

    def to_dict(self) -> dict:
        return {"config": self.config.to_dict(), "reports": self.reports,
                "aggregates": self.aggregates}


def _stats(values) -> dict | None:
    if not values:
        return None
    arr = np.asarray(values, dtype=float)
    return {"mean": float(arr.mean()), "min": float(arr.min()), "max": float(arr.max())}


def aggregate(kind: str, reports: list[dict]) -> dict:
    """Summary statistics; recomputable from the per-repetition reports alone."""
    wins = [r for r in reports if r.get("success")]
    out = {"repetitions": len(reports), "successes": len(wins),
           "failures": sum(1 for r in reports if r.get("reason") == "INCOMPLETE"),
           "success_rate": len(wins) / len(reports) if reports else 0.0}
    costs = [r["success_cost"] for r in wins if r.get("success_cost") is not None]
    if costs:
        unit = wins[0].get("cost_unit", "actions")
        outcomes = [AttackOutcome(c, unit=unit) for c in costs]
        out["cost"] = _stats(costs)
        out["cost_unit"] = unit
        out["vulnerability"] = score_json(vulnerability(outcomes))
        out["resilience"] = score_json(resilience(outcomes))
    elif kind != "dynamics-demo":
        out["vulnerability"] = score_json(vulnerability([]))
        out["resilience"] = score_json(resilience([]))
    if kind in ("grid-cascade", "net-fragmentation", "formation-destabilize"):
        out["impact"] = _stats([r["success_impact"] for r in wins])
    if kind == "grid-cascade":
        out["cascaded"] = _stats([r["success_details"]["cascaded"] for r in wins])
        out["direct_trips"] = _stats([r["success_details"]["direct"] for r in wins])
        out["reference"] = {"mean_cascaded": 8.6, "direct_trips": 3, "vulnerability": 1 / 3}
    if kind == "policy-induction":
        out["agreement"] = _stats([r["agreement"] for r in reports if "agreement" in r])
        out["final_half_below"] = sum(1 for r in reports if r.get("final_half_below"))
    return out


def run_experiment(cfg: ScenarioConfig, write: bool = True) -> ExperimentResult:
    """Run every repetition (serially or on ``cfg.workers`` processes) and persist."""
    start = time.perf_counter()
    indices = range(cfg.repetitions)
    if cfg.workers > 1 and cfg.repetitions > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            reports = list(pool.map(_run_indexed, [(cfg.to_dict(), i) for i in indices]))
    else:
        reports = [run_repetition(cfg, i) for i in indices]
    result = ExperimentResult(cfg, reports, aggregate(cfg.kind, reports),
                              time.perf_counter() - start)
    if write:
        from .report import emit_curves
        emit_curves(result, cfg.output_dir)
    return result


# --- persistence ------------------------------------------------------------

def atomic_write(path: Path, text: str) -> None:
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def dump_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=1) + "\n"


def metadata_block(result: ExperimentResult) -> dict:
    return {"written_at": datetime.now(timezone.utc).isoformat(timespec="seconds"),
            "wall_clock_s": round(result.wall_clock, 3)}


def load_result(path) -> ExperimentResult:
    """Read ``result.json`` (or a directory holding one)."""
    path = Path(path)
    if path.is_dir():
        path = path / RESULT_FILE
    raw = json.loads(path.read_text(encoding="utf-8"))
    cfg = config_from_dict(raw["config"])
    return ExperimentResult(cfg, raw["reports"], raw["aggregates"])
