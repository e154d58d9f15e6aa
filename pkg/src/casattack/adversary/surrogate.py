"""The adversary's model of the target: empirical counts or the exact simulator."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Hashable, Iterable

import numpy as np

from .mdp import AttackMDP
from .qlearning import ExplorationSchedule, TabularQ, epsilon_greedy, q_update

# (next state key, terminal)
Outcome = tuple


@dataclass
class SurrogateModel:
    """Empirical transition counts ``(s, a) -> {(s', terminal): n}`` with mean rewards.

    Rewards are averaged per outcome so a sampled transition carries the
    reward that was seen with it. ``prior`` counts can be merged in with
    :meth:`add_prior` to model partial a-priori knowledge.
    """

    counts: dict = field(default_factory=dict)
    reward_sums: dict = field(default_factory=dict)
    observations: int = 0

    def record(self, s, a: int, r: float, s_next, terminal: bool = False, weight: int = 1) -> None:
        out = (s_next, bool(terminal))
        table = self.counts.setdefault((s, a), {})
        table[out] = table.get(out, 0) + weight
        key = (s, a, out)
        self.reward_sums[key] = self.reward_sums.get(key, 0.0) + weight * float(r)
        self.observations += weight

    def add_prior(self, transitions: Iterable[tuple], weight: int = 1) -> "SurrogateModel":
        for t in transitions:
            self.record(*t[:4], terminal=bool(t[4]) if len(t) > 4 else False, weight=weight)
        return self

    def distribution(self, s, a: int) -> dict:
        table = self.counts.get((s, a), {})
        total = sum(table.values())
        return {out: n / total for out, n in table.items()} if total else {}

    def probability(self, s, a: int, s_next) -> float:
        return sum(p for (nxt, _), p in self.distribution(s, a).items() if nxt == s_next)

    def reward(self, s, a: int, outcome: Outcome | None = None) -> float:
        """Mean reward of ``(s, a)``, or of the given outcome of it."""
        table = self.counts.get((s, a), {})
        if outcome is not None:
            n = table.get(outcome, 0)
            return self.reward_sums.get((s, a, outcome), 0.0) / n if n else 0.0
        total = sum(table.values())
        if not total:
            return 0.0
        return sum(self.reward_sums[(s, a, o)] for o in table) / total

    def known_actions(self, s) -> list[int]:
        return sorted(a for (st, a) in self.counts if st == s)

    def states(self) -> list:
        return list(dict.fromkeys(st for (st, _) in self.counts))

    def sample(self, s, a: int, rng: np.random.Generator) -> tuple:
        """Draw ``(s', r, terminal)`` from the empirical distribution."""
        table = self.counts[(s, a)]
        outs = list(table)
        if len(outs) == 1:
            out = outs[0]
        else:
            w = np.array([table[o] for o in outs], dtype=float)
            out = outs[int(rng.choice(len(outs), p=w / w.sum()))]
        return out[0], self.reward(s, a, out), out[1]


def estimate_dynamics(model: SurrogateModel, observation: tuple) -> SurrogateModel:
    """Fold one ``(s, a, r, s_next[, terminal])`` observation into ``model`` (in place)."""
    s, a, r, s_next = observation[:4]
    terminal = bool(observation[4]) if len(observation) > 4 else False
    model.record(s, a, r, s_next, terminal)
    return model


class ExactModel:
    """Whitebox model: every query goes to the target's own pure simulator.

    Configurations are remembered by state key the first time they are
    seen; later configurations that hash to the same key reuse the first.
    """

    def __init__(self, target, mdp: AttackMDP):
        self.target = target
        self.mdp = mdp
        self.configs: dict = {}
        self._cache: dict = {}

    def register(self, config) -> Hashable:
        key = self.mdp.encode(config)
        self.configs.setdefault(key, config)
        return key

    def known_actions(self, s) -> list[int]:
        cfg = self.configs.get(s)
        if cfg is None or self.mdp.is_terminal(cfg):
            return []
        return list(self.target.valid_actions(cfg))

    def states(self) -> list:
        return list(self.configs)

    def sample(self, s, a: int, rng=None) -> tuple:
        hit = self._cache.get((s, a))
        if hit is None:
            cfg = self.configs[s]
            nxt = self.target.simulate(cfg, a)
            hit = (self.register(nxt), self.mdp.reward(cfg, a, nxt), self.mdp.is_terminal(nxt))
            self._cache[(s, a)] = hit
        return hit


def plan_on_surrogate(model, mdp: AttackMDP, episodes: int, rng: np.random.Generator, *,
                      q: TabularQ | None = None, start=None, horizon: int = 50,
                      alpha: float = 0.1, floor: float = 0.05) -> TabularQ:
    """Epsilon-greedy Q-learning run entirely inside ``model``.

    Episodes begin at ``start`` when given, otherwise at a uniformly drawn
    known state. Only actions the model knows about are tried; a state with
    none of them ends the episode. Running out of ``horizon`` truncates the
    episode without treating it as terminal. Exploration anneals linearly
    from 1 to ``floor`` over the call. ``q`` is updated in place when given.
    """
    if episodes < 1:
        raise ValueError("episodes must be >= 1")
    if q is None:
        q = TabularQ(mdp.n_actions, discount=mdp.discount, alpha=alpha)
    states = model.states()
    if not states or (start is not None and not model.known_actions(start)):
        return q
    saved = q.exploration
    q.exploration = ExplorationSchedule.over(episodes * horizon, 1.0, floor)
    known: dict = {}

    def acts(s):
        got = known.get(s)
        if got is None:
            got = known[s] = model.known_actions(s)
        return got

    try:
        for _ in range(episodes):
            s = start if start is not None else states[int(rng.integers(len(states)))]
            for _ in range(horizon):
                available = acts(s)
                if not available:
                    break
                a = epsilon_greedy(q, s, rng, available)
                s_next, r, terminal = model.sample(s, a, rng)
                q_update(q, s, a, r, s_next, terminal, next_actions=acts(s_next))
                if terminal:
                    break
                s = s_next
    finally:
        q.exploration = saved
    return q
