"""Reinforcement-learning adversary: Q-learning, target models and the attack loop."""

from .loop import AttackReport, IterationRecord, run_attack_loop
from .mdp import AttackMDP, TargetAdapter
from .qlearning import ExplorationSchedule, TabularQ, epsilon_greedy, greedy_policy, q_update
from .surrogate import ExactModel, SurrogateModel, estimate_dynamics, plan_on_surrogate
from .targets import FiniteMDPTarget, FormationTarget, GraphRemovalTarget, GridTarget

__all__ = [
    "AttackMDP", "AttackReport", "ExactModel", "ExplorationSchedule", "FiniteMDPTarget",
    "FormationTarget", "GraphRemovalTarget", "GridTarget", "IterationRecord", "SurrogateModel",
    "TabularQ", "TargetAdapter", "epsilon_greedy", "estimate_dynamics", "greedy_policy",
    "plan_on_surrogate", "q_update", "run_attack_loop",
]
