"""Tabular Q-learning: table, exploration schedule and the Bellman update."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Hashable, Sequence

import numpy as np


@dataclass
class ExplorationSchedule:
    """Linear anneal ``rate = max(floor, initial - step * calls)``."""

    initial: float = 1.0
    step: float = 0.0
    floor: float = 0.05
    calls: int = 0

    def __post_init__(self):
        if not (0.0 <= self.floor <= self.initial <= 1.0):
            raise ValueError("need 0 <= floor <= initial <= 1")
        if self.step < 0:
            raise ValueError("anneal step must be non-negative")

    @property
    def rate(self) -> float:
        return max(self.floor, self.initial - self.step * self.calls)

    def advance(self) -> None:
        self.calls += 1

    @classmethod
    def over(cls, horizon: int, initial: float = 1.0, floor: float = 0.05) -> "ExplorationSchedule":
        """Schedule reaching ``floor`` after ``horizon`` calls."""
        step = (initial - floor) / max(horizon, 1)
        return cls(initial, step, floor)


@dataclass
class TabularQ:
    """Q table over hashable state keys and integer actions ``0..n_actions-1``.

    Unseen pairs read as 0. The learning rate for a pair decays as
    ``alpha / (1 + alpha_decay * visits)`` and never drops below ``alpha_floor``.
    """

    n_actions: int
    discount: float = 0.9
    alpha: float = 0.1
    alpha_decay: float = 0.0
    alpha_floor: float = 0.0
    exploration: ExplorationSchedule = field(default_factory=ExplorationSchedule)
    table: dict = field(default_factory=dict)
    visits: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.n_actions < 1:
            raise ValueError("need at least one action")
        if not 0.0 <= self.discount < 1.0:
            raise ValueError("discount must lie in [0, 1)")
        if not 0.0 < self.alpha <= 1.0:
            raise ValueError("alpha must lie in (0, 1]")

    def values(self, s: Hashable) -> np.ndarray:
        row = self.table.get(s)
        return row if row is not None else np.zeros(self.n_actions)

    def __getitem__(self, key) -> float:
        s, a = key
        return float(self.values(s)[a])

    def max_value(self, s: Hashable, actions: Sequence[int] | None = None) -> float:
        row = self.values(s)
        if actions is None:
            return float(row.max())
        if len(actions) == 0:
            return 0.0
        return float(row[list(actions)].max())

    def learning_rate(self, s, a) -> float:
        n = self.visits.get((s, a), 0)
        return max(self.alpha_floor, self.alpha / (1.0 + self.alpha_decay * n))

    def snapshot(self) -> dict:
        return {s: row.copy() for s, row in self.table.items()}

    def copy(self) -> "TabularQ":
        return TabularQ(self.n_actions, self.discount, self.alpha, self.alpha_decay,
                        self.alpha_floor,
                        ExplorationSchedule(**vars(self.exploration)),
                        self.snapshot(), dict(self.visits))


def q_update(q: TabularQ, s, a: int, r: float, s_next, terminal: bool,
             next_actions: Sequence[int] | None = None) -> TabularQ:
    """One Bellman backup, in place: ``Q <- (1-a) Q + a (r + discount * max Q(s', .))``.

    The bootstrap term is dropped for terminal transitions and, when
    ``next_actions`` is given, the max runs over those actions only.
    """
    if not math.isfinite(r):
        raise ValueError(f"reward must be finite, got {r!r}")
    target = r if terminal else r + q.discount * q.max_value(s_next, next_actions)
    lr = q.learning_rate(s, a)
    row = q.table.get(s)
    if row is None:
        row = q.table[s] = np.zeros(q.n_actions)
    row[a] = (1.0 - lr) * row[a] + lr * target
    q.visits[(s, a)] = q.visits.get((s, a), 0) + 1
    return q


def greedy_policy(q: TabularQ, s, actions: Sequence[int] | None = None) -> int:
    """Argmax of ``Q(s, .)``; ties go to the lowest action index."""
    row = q.values(s)
    if actions is None:
        return int(np.argmax(row))
    acts = sorted(actions)
    if not acts:
        raise ValueError("no action available")
    vals = row[acts]
    return int(acts[int(np.argmax(vals))])


def epsilon_greedy(q: TabularQ, s, rng: np.random.Generator,
                   actions: Sequence[int] | None = None) -> int:
    """Uniform random action with the current exploration rate, else greedy; then anneal."""
    acts = list(range(q.n_actions)) if actions is None else sorted(actions)
    if rng.random() < q.exploration.rate:
        choice = int(acts[int(rng.integers(len(acts)))])
    else:
        choice = greedy_policy(q, s, None if actions is None else acts)
    q.exploration.advance()
    return choice
