"""Concrete attack targets: power grid, network node removal, formation game, finite MDP."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

import numpy as np

from ..game import FormationGame, best_response_dynamics, remove_player
from ..graph import Graph, fragmentation
from ..grid import PowerGrid, failed_line_count, trip_line
from .mdp import TargetAdapter


@dataclass(frozen=True)
class GridState:
    grid: PowerGrid
    trips: tuple[int, ...] = ()


class GridTarget(TargetAdapter):
    """Line-trip attack on a power grid.

    Action ``k`` trips the ``k``-th line. Reward per trip is
    ``cascade_gain * cascaded - trip_cost``, plus ``goal_bonus`` on the trip
    that brings total failures to ``objective``.
    """

    cost_unit = "direct line trips"
    impact_unit = "failed lines"

    def __init__(self, grid: PowerGrid, objective: int = 8, cascade_gain: float = 1.0,
                 trip_cost: float = 1.0, goal_bonus: float = 10.0):
        super().__init__()
        self.grid = grid
        self.objective = objective
        self.cascade_gain = cascade_gain
        self.trip_cost = trip_cost
        self.goal_bonus = goal_bonus
        self.line_ids = tuple(ln.id for ln in grid.lines)
        self.n_actions = len(self.line_ids)

    def initial(self) -> GridState:
        return GridState(self.grid)

    def simulate(self, config: GridState, action: int) -> GridState:
        after, _ = trip_line(config.grid, self.line_ids[action], self.objective)
        return GridState(after, config.trips + (action,))

    def valid_actions(self, config: GridState) -> list[int]:
        return [k for k, ln in enumerate(config.grid.lines) if ln.alive]

    def encode(self, config: GridState) -> tuple:
        return tuple(config.grid.failed_ids)

    def impact(self, config: GridState) -> float:
        return float(failed_line_count(config.grid))

    def reward(self, before: GridState, action: int, after: GridState) -> float:
        failed_before = failed_line_count(before.grid)
        failed_after = failed_line_count(after.grid)
        cascaded = failed_after - failed_before - 1
        r = self.cascade_gain * cascaded - self.trip_cost
        if failed_before < self.objective <= failed_after:
            r += self.goal_bonus
        return r

    def labels(self) -> tuple:
        return self.line_ids

    def details(self, config: GridState) -> dict:
        failed = failed_line_count(config.grid)
        return {"direct": len(config.trips), "cascaded": failed - len(config.trips),
                "shed_mw": config.grid.shed_mw}


class GraphRemovalTarget(TargetAdapter):
    """Node-removal attack; impact is the fragmentation of the surviving graph.

    A configuration is the frozenset of removed nodes. The per-removal reward
    is the fragmentation reached (``reward="level"``), so a return sums the
    whole fragmentation curve, or its increase (``reward="delta"``).
    Fragmentation values are cached per configuration.
    """

    cost_unit = "nodes removed"
    impact_unit = "fragmentation"

    def __init__(self, graph: Graph, reward: str = "level"):
        super().__init__()
        if reward not in ("level", "delta"):
            raise ValueError("reward must be 'level' or 'delta'")
        self.reward_kind = reward
        self.graph = graph
        self.nodes = graph.nodes
        self.n_actions = len(self.nodes)
        self._adj = {v: graph.neighbours(v) for v in graph.nodes}
        self._frag: dict = {}

    def initial(self) -> frozenset:
        return frozenset()

    def simulate(self, config: frozenset, action: int) -> frozenset:
        node = self.nodes[action]
        if node in config:
            raise ValueError(f"node {node} already removed")
        return config | {node}

    def valid_actions(self, config: frozenset) -> list[int]:
        return [k for k, v in enumerate(self.nodes) if v not in config]

    def encode(self, config: frozenset) -> tuple:
        return tuple(sorted(config))

    def impact(self, config: frozenset) -> float:
        hit = self._frag.get(config)
        if hit is None:
            hit = self._frag[config] = self._fragmentation(config)
        return hit

    def reward(self, before: frozenset, action: int, after: frozenset) -> float:
        if self.reward_kind == "level":
            return self.impact(after)
        return self.impact(after) - self.impact(before)

    def _fragmentation(self, removed: frozenset) -> float:
        alive = [v for v in self.nodes if v not in removed]
        n = len(alive)
        if n < 2:
            return 1.0
        seen: set = set(removed)
        linked = 0
        for s in alive:
            if s in seen:
                continue
            seen.add(s)
            size = 0
            queue = deque([s])
            while queue:
                v = queue.popleft()
                size += 1
                for w in self._adj[v]:
                    if w not in seen:
                        seen.add(w)
                        queue.append(w)
            linked += size * (size - 1)
        return 1.0 - linked / (n * (n - 1))

    def labels(self) -> tuple:
        return self.nodes

    def details(self, config: frozenset) -> dict:
        return {"removed": sorted(config)}


@dataclass(frozen=True)
class FormationState:
    game: FormationGame
    graph: Graph
    removed: frozenset = frozenset()


class FormationTarget(TargetAdapter):
    """Player-removal attack on a formation game.

    After each removal the survivors re-run best-response dynamics from the
    remaining links; impact is the fragmentation of the resulting network.
    """

    cost_unit = "players removed"
    impact_unit = "fragmentation"

    def __init__(self, game: FormationGame, g0: Graph | None = None, max_rounds: int = 100):
        super().__init__()
        self.game = game
        self.g0 = g0 if g0 is not None else Graph(game.players)
        self.max_rounds = max_rounds
        self.n_actions = game.n
        self._start = None

    def initial(self) -> FormationState:
        if self._start is None:
            settled = best_response_dynamics(self.game, self.g0, self.max_rounds).graph
            self._start = FormationState(self.game, settled)
        return self._start

    def simulate(self, config: FormationState, action: int) -> FormationState:
        player = self.game.players[action]
        game, g = remove_player(config.game, config.graph, player)
        if game.n:
            g = best_response_dynamics(game, g, self.max_rounds).graph
        return FormationState(game, g, config.removed | {player})

    def valid_actions(self, config: FormationState) -> list[int]:
        return [k for k, p in enumerate(self.game.players) if p not in config.removed]

    def encode(self, config: FormationState) -> tuple:
        return tuple(sorted(config.removed))

    def impact(self, config: FormationState) -> float:
        return fragmentation(config.graph) if config.graph.n >= 2 else 1.0

    def labels(self) -> tuple:
        return self.game.players

    def details(self, config: FormationState) -> dict:
        return {"removed": sorted(config.removed), "links": len(config.graph.edges)}


class FiniteMDPTarget(TargetAdapter):
    """Deterministic finite MDP given as ``next_state[s, a]`` and ``rewards[s, a]``.

    Impact is 1 in a goal state and 0 elsewhere; goal states are terminal.
    """

    impact_unit = "goal reached"

    def __init__(self, next_state, rewards, start: int = 0, goals=()):
        super().__init__()
        self.next_state = np.asarray(next_state, dtype=int)
        self.rewards = np.asarray(rewards, dtype=float)
        if self.next_state.shape != self.rewards.shape:
            raise ValueError("transition and reward tables must have the same shape")
        self.start = start
        self.goals = frozenset(goals)
        self.n_actions = self.next_state.shape[1]

    def initial(self) -> int:
        return self.start

    def simulate(self, config: int, action: int) -> int:
        return int(self.next_state[config, action])

    def valid_actions(self, config: int) -> list[int]:
        return list(range(self.n_actions))

    def encode(self, config: int) -> int:
        return int(config)

    def impact(self, config: int) -> float:
        return 1.0 if config in self.goals else 0.0

    def reward(self, before: int, action: int, after: int) -> float:
        return float(self.rewards[before, action])

    def transitions(self) -> list[tuple]:
        """Complete ``(s, a, r, s', terminal)`` table, e.g. as a surrogate prior."""
        out = []
        for s in range(self.next_state.shape[0]):
            if s in self.goals:
                continue
            for a in range(self.n_actions):
                nxt = int(self.next_state[s, a])
                out.append((s, a, float(self.rewards[s, a]), nxt, nxt in self.goals))
        return out
