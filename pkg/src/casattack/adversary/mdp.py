"""Attack MDP description and the adapter interface every target implements."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Hashable, Sequence


@dataclass(frozen=True)
class AttackMDP:
    """Encoder, action set, reward and discount of an attack problem.

    ``impact`` maps a target configuration to the scalar the objective is
    measured in; a configuration is terminal once ``impact >= objective`` or
    when no action is left.
    """

    n_actions: int
    encode: Callable[[object], Hashable]
    reward: Callable[[object, int, object], float]
    impact: Callable[[object], float]
    valid_actions: Callable[[object], Sequence[int]]
    objective: float
    discount: float = 0.9
    labels: tuple = ()

    def __post_init__(self):
        if self.n_actions < 1:
            raise ValueError("action set must be non-empty")
        if not 0.0 <= self.discount < 1.0:
            raise ValueError("discount must lie in [0, 1)")

    def label(self, a: int):
        return self.labels[a] if self.labels else a

    def reached(self, config) -> bool:
        return self.impact(config) >= self.objective

    def is_terminal(self, config) -> bool:
        return self.reached(config) or not self.valid_actions(config)


class TargetAdapter:
    """Base class for attack targets.

    Subclasses provide the pure model: ``initial``, ``simulate``,
    ``valid_actions``, ``encode``, ``impact`` and ``reward``. This base class
    adds the stateful ``reset``/``observe``/``act`` view the attack loop
    uses on the real target.
    """

    n_actions: int = 0
    cost_unit: str = "actions"
    impact_unit: str = ""

    def __init__(self):
        self.current = None

    # pure model -------------------------------------------------------
    def initial(self):
        raise NotImplementedError

    def simulate(self, config, action: int):
        raise NotImplementedError

    def valid_actions(self, config) -> list[int]:
        raise NotImplementedError

    def encode(self, config) -> Hashable:
        raise NotImplementedError

    def impact(self, config) -> float:
        raise NotImplementedError

    def reward(self, before, action: int, after) -> float:
        return self.impact(after) - self.impact(before)

    def labels(self) -> tuple:
        return ()

    def mdp(self, objective: float, discount: float = 0.9) -> AttackMDP:
        return AttackMDP(self.n_actions, self.encode, self.reward, self.impact,
                         self.valid_actions, float(objective), discount, self.labels())

    # live view --------------------------------------------------------
    def reset(self):
        self.current = self.initial()
        return self.current

    def observe(self):
        return self.current

    def act(self, action: int):
        before = self.current
        self.current = self.simulate(before, action)
        return before, self.current

    def details(self, config) -> dict:
        """Scenario-specific extras for the report."""
        return {}
