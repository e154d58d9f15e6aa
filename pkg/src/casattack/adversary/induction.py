"""Training-time policy induction through observation substitution, on a tabular corridor.

Phase 1 trains the adversary's own Q table on the negated reward. Phase 2
trains a fresh target learner while the adversary swaps each observation
for a state from its budget, chosen so the learner's greedy action matches
the adversary's policy. Ties among equally agreeing candidates are broken
to bias the learner's bootstrap: after the learner acted as the adversary
wanted, the candidate with the highest value is shown, otherwise the one
with the lowest. Remaining ties favour the true state.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Mapping

import numpy as np

from .qlearning import ExplorationSchedule, TabularQ, epsilon_greedy, greedy_policy, q_update

LEFT, RIGHT = 0, 1


@dataclass(frozen=True)
class Corridor:
    """States ``0..length-1``; the ends are terminal, paying -1 (left) and +1 (right).

    Episodes start at ``start`` (default: the middle cell) and are cut after
    ``horizon`` steps (default ``4 * length``).
    """

    length: int = 32
    start: int | None = None
    horizon: int | None = None
    n_actions: int = 2

    def __post_init__(self):
        if not 3 <= self.length <= 100:
            raise ValueError("corridor length must lie in [3, 100]")
        if self.start is not None and self.start not in self.interior:
            raise ValueError("start must be an interior cell")

    @property
    def interior(self) -> range:
        return range(1, self.length - 1)

    @property
    def start_state(self) -> int:
        return self.start if self.start is not None else (self.length - 1) // 2

    @property
    def max_steps(self) -> int:
        return self.horizon if self.horizon is not None else 4 * self.length

    def step(self, s: int, a: int) -> tuple[int, float, bool]:
        s2 = s - 1 if a == LEFT else s + 1
        if s2 == 0:
            return s2, -1.0, True
        if s2 == self.length - 1:
            return s2, 1.0, True
        return s2, 0.0, False

    def mirror(self, s: int) -> int:
        return self.length - 1 - s


Budget = Mapping[int, tuple[int, ...]]


def self_budget(env: Corridor) -> dict[int, tuple[int, ...]]:
    return {s: (s,) for s in env.interior}


def mirror_budget(env: Corridor) -> dict[int, tuple[int, ...]]:
    """Each cell may be shown as itself or as its mirror image."""
    return {s: tuple(sorted({s, env.mirror(s)})) for s in env.interior}


def train_adversary(env: Corridor, episodes: int, rng: np.random.Generator, *,
                    discount: float = 0.9, alpha: float = 0.5) -> TabularQ:
    """Phase 1: Q-learning on the negated reward with exploring starts."""
    q = TabularQ(env.n_actions, discount=discount, alpha=alpha,
                 exploration=ExplorationSchedule(1.0, 0.0, 1.0))
    cells = list(env.interior)
    for _ in range(episodes):
        s = cells[int(rng.integers(len(cells)))]
        for _ in range(env.max_steps):
            a = epsilon_greedy(q, s, rng)
            s2, r, done = env.step(s, a)
            q_update(q, s, a, -r, s2, done)
            if done:
                break
            s = s2
    return q


@dataclass
class InductionResult:
    unperturbed: np.ndarray        # mean episode reward per epoch
    perturbed: np.ndarray
    agreement: float               # under the substitution channel
    clean_agreement: float         # learner's greedy action on the true state
    adversary_policy: dict
    target_policy: dict = field(default_factory=dict)

    def final_half_below(self) -> bool:
        h = len(self.perturbed) // 2
        return bool(self.perturbed[h:].mean() < self.unperturbed[h:].mean())

    @property
    def divergence_epoch(self) -> int | None:
        """First epoch (1-based) from which the perturbed running mean stays below
        the unperturbed one; None if it never separates for good."""
        k = np.arange(1, len(self.perturbed) + 1)
        below = np.cumsum(self.perturbed) / k < np.cumsum(self.unperturbed) / k
        if not below[-1]:
            return None
        above = np.flatnonzero(~below)
        return int(above[-1] + 2) if len(above) else 1


def substitute(q: TabularQ, s: int, budget: Budget, wanted: int, prev_agreed: bool | None) -> int:
    """Observation the adversary shows for true state ``s``."""
    options = budget.get(s) or (s,)
    if len(options) == 1:
        return options[0]
    sign = -1.0 if prev_agreed is False else 1.0

    def key(o):
        return (greedy_policy(q, o) == wanted, sign * q.max_value(o), o == s, -o)

    return max(options, key=key)


def _train_target(env: Corridor, epochs: int, episodes_per_epoch: int, seed: int,
                  chooser: Callable | None, learner: dict) -> tuple[TabularQ, np.ndarray]:
    rng = np.random.default_rng(seed)
    q = TabularQ(env.n_actions, discount=learner["discount"], alpha=learner["alpha"])
    schedule = ExplorationSchedule.over(learner["explore_epochs"], 1.0, learner["floor"])
    curve = np.zeros(epochs)
    for ep in range(epochs):
        # exploration is held fixed within an epoch
        rate = schedule.rate
        schedule.advance()
        q.exploration = ExplorationSchedule(rate, 0.0, rate)
        total = 0.0
        for _ in range(episodes_per_epoch):
            s = env.start_state
            o = chooser(q, s, None) if chooser else s
            for _ in range(env.max_steps):
                a = epsilon_greedy(q, o, rng)
                s2, r, done = env.step(s, a)
                total += r
                if done:
                    q_update(q, o, a, r, s2, True)
                    break
                o2 = chooser(q, s2, a, s) if chooser else s2
                q_update(q, o, a, r, o2, False)
                s, o = s2, o2
        curve[ep] = total / episodes_per_epoch
    return q, curve


def policy_induction_experiment(env: Corridor, budget: Budget, epochs: int = 200,
                                seed: int = 0, *, episodes_per_epoch: int = 10,
                                adversary_episodes: int = 2000, discount: float = 0.9,
                                alpha: float = 0.1, explore_fraction: float = 0.5,
                                floor: float = 0.0) -> InductionResult:
    """Compare a learner trained under observation substitution with a clean one.

    Both learners use the same seed, so with a self-only budget the two
    reward curves are identical. The learner's exploration anneals from 1 to
    ``floor`` over the first ``explore_fraction`` of the epochs.
    """
    if epochs < 2:
        raise ValueError("need at least two epochs")
    adv = train_adversary(env, adversary_episodes, np.random.default_rng(seed), discount=discount)
    pi_adv = {s: greedy_policy(adv, s) for s in env.interior}
    learner = {"discount": discount, "alpha": alpha, "floor": floor,
               "explore_epochs": max(1, int(round(explore_fraction * epochs)))}

    def chooser(q, s, prev_action, prev_state=None):
        agreed = None if prev_action is None else prev_action == pi_adv[prev_state]
        return substitute(q, s, budget, pi_adv[s], agreed)

    _, clean = _train_target(env, epochs, episodes_per_epoch, seed, None, learner)
    q, attacked = _train_target(env, epochs, episodes_per_epoch, seed, chooser, learner)

    cells = list(env.interior)
    shown = {s: chooser(q, s, None) for s in cells}
    agreement = float(np.mean([greedy_policy(q, shown[s]) == pi_adv[s] for s in cells]))
    clean_agreement = float(np.mean([greedy_policy(q, s) == pi_adv[s] for s in cells]))
    return InductionResult(clean, attacked, agreement, clean_agreement, pi_adv,
                           {s: greedy_policy(q, shown[s]) for s in cells})
