"""Strategic network-formation game with homophily and idiosyncratic shocks.

Links are directed: player ``i`` owns row ``i`` of the adjacency matrix and
earns

    U_i = sum_j G_ij * (V_ij(G_-i) + eps_ij)

where ``G_-i`` is the adjacency matrix without row ``i``, and

    V_ij = theta . X_ij + theta_reciprocity * [j -> i]
           + theta_common * #{k : j -> k and k -> i}

with ``X_ij = |F_i - F_j|`` the element-wise feature distance. Since
``V_ij`` never looks at row ``i``, a player's payoff is linear in its own
links.

Nash stability: no player gains by rewriting its own row.
Pairwise stability: no player gains by dropping one of its links, and no
unlinked pair would form the reciprocal link ``i <-> j`` with one side
strictly better off and the other no worse.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .errors import BudgetExceededError, NotFoundError
from .graph import Edge, Graph

GAIN_TOL = 1e-12
MAX_DEVIATIONS = 2 ** 11


@dataclass(frozen=True, eq=False)
class FormationGame:
    players: tuple[int, ...]
    base_values: np.ndarray          # theta . X_ij
    shocks: np.ndarray               # eps_ij
    theta_reciprocity: float = 0.0
    theta_common: float = 0.0
    weights: tuple[float, ...] = (1.0,)
    link_types: int = 1
    theta: tuple[float, ...] = ()
    features: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        n = len(self.players)
        if self.base_values.shape != (n, n) or self.shocks.shape != (n, n):
            raise ValueError("value and shock matrices must be N x N")
        if not (np.all(np.isfinite(self.base_values)) and np.all(np.isfinite(self.shocks))):
            raise ValueError("payoff components must be finite")
        if not self.weights or any(w <= 0 for w in self.weights):
            raise ValueError("permissible weight set must be non-empty and positive")
        if self.link_types != 1:
            raise ValueError("only a single link type is supported")
        object.__setattr__(self, "_pos", {p: k for k, p in enumerate(self.players)})

    @classmethod
    def from_features(cls, features, theta, *, seed: int = 0, shock_scale: float = 1.0,
                      theta_reciprocity: float = 0.0, theta_common: float = 0.0,
                      weights=(1.0,), intercept: float = 0.0) -> "FormationGame":
        """Linear homophily game ``intercept + theta . X_ij``.

        Shocks are i.i.d. logistic(0, shock_scale) drawn from ``seed``.
        """
        f = np.asarray(features, dtype=float)
        if f.ndim == 1:
            f = f[:, None]
        th = np.atleast_1d(np.asarray(theta, dtype=float))
        n = f.shape[0]
        values = intercept + np.abs(f[:, None, :] - f[None, :, :]) @ th
        np.fill_diagonal(values, 0.0)
        if shock_scale > 0:
            shocks = np.random.default_rng(seed).logistic(0.0, shock_scale, size=(n, n))
        else:
            shocks = np.zeros((n, n))
        np.fill_diagonal(shocks, 0.0)
        return cls(tuple(range(n)), values, shocks, theta_reciprocity, theta_common,
                   tuple(float(w) for w in weights), 1, tuple(th.tolist()), f)

    @property
    def n(self) -> int:
        return len(self.players)

    def index(self, player: int) -> int:
        try:
            return self._pos[player]
        except KeyError:
            raise NotFoundError(f"player {player} not in game") from None

    def adjacency(self, g: Graph) -> np.ndarray:
        """Directed weight matrix; undirected edges count in both directions."""
        a = np.zeros((self.n, self.n))
        for e in g.edges:
            i, j = self.index(e.u), self.index(e.v)
            a[i, j] = e.weight
            if not e.directed:
                a[j, i] = e.weight
        return a

    def graph(self, a: np.ndarray) -> Graph:
        edges = [Edge(self.players[i], self.players[j], float(a[i, j]), True)
                 for i in range(self.n) for j in range(self.n) if i != j and a[i, j] > 0]
        return Graph(self.players, tuple(edges))

    def link_values(self, i: int, a: np.ndarray) -> np.ndarray:
        """``V_ij(G_-i) + eps_ij`` for every ``j``; entry ``i`` is 0."""
        linked = (a > 0).astype(float)
        v = self.base_values[i] + self.shocks[i]
        if self.theta_reciprocity:
            v = v + self.theta_reciprocity * linked[:, i]
        if self.theta_common:
            # sum_k [j->k][k->i]; the zero diagonal keeps k = i, j out
            common = linked @ linked[:, i]
            v = v + self.theta_common * common
        v = v.copy()
        v[i] = 0.0
        return v

    def payoff(self, i: int, a: np.ndarray) -> float:
        return float(a[i] @ self.link_values(i, a))


def agent_payoff(game: FormationGame, player: int, g: Graph) -> float:
    """Payoff of ``player`` in network ``g``; a player with no links earns 0."""
    return game.payoff(game.index(player), game.adjacency(g))


def _rows(game: FormationGame, i: int) -> np.ndarray:
    """Every row player ``i`` could choose, one per line, in lexicographic order."""
    others = [j for j in range(game.n) if j != i]
    levels = (0.0,) + game.weights
    count = len(levels) ** len(others)
    if count > MAX_DEVIATIONS:
        raise BudgetExceededError(
            f"{count} deviations for player {game.players[i]} exceed the exact-check budget "
            f"of {MAX_DEVIATIONS}; use a sampled check instead")
    rows = np.zeros((count, game.n))
    if others:
        rows[:, others] = np.array(list(itertools.product(levels, repeat=len(others))))
    return rows


def _best_row(game: FormationGame, i: int, a: np.ndarray) -> np.ndarray | None:
    """Exact best response of player ``i`` or None when the current row is optimal.

    Payoffs are linear in the player's own row, so each link is decided by
    the sign of its value; zero-value links keep their current weight.
    """
    v = game.link_values(i, a)
    top = max(game.weights)
    row = a[i].copy()
    for j in range(game.n):
        if j == i:
            continue
        if v[j] > GAIN_TOL:
            row[j] = top
        elif v[j] < -GAIN_TOL:
            row[j] = 0.0
    if np.array_equal(row, a[i]):
        return None
    return row


def is_nash_stable(game: FormationGame, g: Graph) -> bool:
    """Exhaustive check: no player strictly gains by rewriting its own links."""
    a = game.adjacency(g)
    for i in range(game.n):
        v = game.link_values(i, a)
        if np.max(_rows(game, i) @ v) > a[i] @ v + GAIN_TOL:
            return False
    return True


def is_pairwise_stable(game: FormationGame, g: Graph) -> bool:
    a = game.adjacency(g)
    for i in range(game.n):
        base = game.payoff(i, a)
        for j in np.flatnonzero(a[i]):
            if j == i:
                continue
            cut = a.copy()
            cut[i, j] = 0.0
            if game.payoff(i, cut) > base + GAIN_TOL:
                return False
    for i, j in itertools.combinations(range(game.n), 2):
        if a[i, j] > 0 or a[j, i] > 0:
            continue
        base_i, base_j = game.payoff(i, a), game.payoff(j, a)
        for w in game.weights:
            b = a.copy()
            b[i, j] = b[j, i] = w
            gi = game.payoff(i, b) - base_i
            gj = game.payoff(j, b) - base_j
            if (gi > GAIN_TOL and gj >= -GAIN_TOL) or (gj > GAIN_TOL and gi >= -GAIN_TOL):
                return False
    return True


class DynamicsResult(NamedTuple):
    graph: Graph
    converged: bool
    rounds: int


def best_response_dynamics(game: FormationGame, g0: Graph, max_rounds: int) -> DynamicsResult:
    """Round-robin exact best responses in ascending player order.

    Stops after the first full round in which nobody changes anything
    (``converged``) or after ``max_rounds``.
    """
    if max_rounds < 1:
        raise ValueError("max_rounds must be >= 1")
    a = game.adjacency(g0)
    for rnd in range(1, max_rounds + 1):
        changed = False
        for i in range(game.n):
            row = _best_row(game, i, a)
            if row is not None:
                a[i] = row
                changed = True
        if not changed:
            return DynamicsResult(game.graph(a), True, rnd)
    return DynamicsResult(game.graph(a), False, max_rounds)


def remove_player(game: FormationGame, g: Graph, player: int) -> tuple[FormationGame, Graph]:
    """Drop ``player`` with its links and its rows/columns of the payoff parameters."""
    k = game.index(player)
    keep = [i for i in range(game.n) if i != k]
    sub = np.ix_(keep, keep)
    new_game = FormationGame(
        tuple(game.players[i] for i in keep),
        game.base_values[sub].copy(),
        game.shocks[sub].copy(),
        game.theta_reciprocity,
        game.theta_common,
        game.weights,
        game.link_types,
        game.theta,
        None if game.features is None else game.features[keep].copy(),
    )
    edges = tuple(e for e in g.edges if player not in (e.u, e.v))
    return new_game, Graph(new_game.players, edges, {k2: v for k2, v in g.attributes.items() if k2 != player})
