"""Adversarial attack simulation on complex adaptive systems."""

from .adversary import (AttackMDP, AttackReport, ExplorationSchedule, TabularQ,
                        plan_on_surrogate, run_attack_loop)
from .dynamics import (DynamicalSystem, DynamicsPerturbation, StatePerturbation, Trajectory,
                       estimate_basins, integrate_flow)
from .errors import CasAttackError, ConfigError
from .game import FormationGame, is_nash_stable, is_pairwise_stable
from .graph import Graph, fragmentation, global_clustering
from .grid import PowerGrid, load_rts79, trip_line
from .metrics import AttackOutcome, classify, resilience, vulnerability
from .scenario import load_config, run_experiment

__version__ = "0.1.0"

__all__ = [
    "AttackMDP", "AttackOutcome", "AttackReport", "CasAttackError", "ConfigError",
    "DynamicalSystem", "DynamicsPerturbation", "ExplorationSchedule", "FormationGame", "Graph",
    "PowerGrid", "StatePerturbation", "TabularQ", "Trajectory", "classify", "estimate_basins",
    "fragmentation", "global_clustering", "integrate_flow", "is_nash_stable",
    "is_pairwise_stable", "load_config", "load_rts79", "plan_on_surrogate", "resilience",
    "run_attack_loop", "run_experiment", "trip_line", "vulnerability",
]
