"""Brute-force reference implementations used as test oracles.

None of these import the code under test beyond its plain data types, and
each one follows the textbook definition as directly as possible.
"""

from __future__ import annotations

import itertools
from fractions import Fraction

import numpy as np


# --- graphs -----------------------------------------------------------------

def reachability(nodes, pairs) -> list[list[bool]]:
    """Transitive closure of the undirected view (Floyd-Warshall style)."""
    idx = {v: i for i, v in enumerate(nodes)}
    n = len(nodes)
    r = [[i == j for j in range(n)] for i in range(n)]
    for u, v in pairs:
        r[idx[u]][idx[v]] = r[idx[v]][idx[u]] = True
    for k in range(n):
        for i in range(n):
            if r[i][k]:
                for j in range(n):
                    if r[k][j]:
                        r[i][j] = True
    return r


def fragmentation_oracle(nodes, pairs) -> Fraction:
    """1 - (ordered mutually reachable pairs) / (n (n - 1))."""
    n = len(nodes)
    r = reachability(nodes, pairs)
    linked = sum(1 for i in range(n) for j in range(n) if i != j and r[i][j])
    return 1 - Fraction(linked, n * (n - 1))


def components_oracle(nodes, pairs) -> list[frozenset]:
    r = reachability(nodes, pairs)
    seen, out = set(), []
    for i, v in enumerate(nodes):
        if v in seen:
            continue
        comp = frozenset(nodes[j] for j in range(len(nodes)) if r[i][j])
        seen |= comp
        out.append(comp)
    return out


def clustering_oracle(nodes, pairs) -> float:
    adj = {v: set() for v in nodes}
    for u, v in pairs:
        adj[u].add(v)
        adj[v].add(u)
    closed = triples = 0
    for centre in nodes:
        for a, b in itertools.combinations(sorted(adj[centre]), 2):
            triples += 1
            closed += b in adj[a]
    return closed / triples if triples else 0.0


def all_shortest_paths(adj, s, t):
    """Every shortest s-t path, by breadth-first enumeration of simple paths."""
    frontier = [[s]]
    while frontier:
        hits = [p for p in frontier if p[-1] == t]
        if hits:
            return hits
        nxt = []
        for p in frontier:
            for w in sorted(adj[p[-1]]):
                if w not in p:
                    nxt.append(p + [w])
        frontier = nxt
    return []


def betweenness_oracle(nodes, pairs) -> dict:
    adj = {v: set() for v in nodes}
    for u, v in pairs:
        adj[u].add(v)
        adj[v].add(u)
    score = {v: Fraction(0) for v in nodes}
    for s, t in itertools.combinations(nodes, 2):
        paths = all_shortest_paths(adj, s, t)
        if not paths:
            continue
        for v in nodes:
            if v in (s, t):
                continue
            through = sum(1 for p in paths if v in p)
            score[v] += Fraction(through, len(paths))
    return score


# --- Q-learning ---------------------------------------------------------------

def random_deterministic_mdp(rng: np.random.Generator, max_states=10, max_actions=4):
    n_s = int(rng.integers(2, max_states + 1))
    n_a = int(rng.integers(1, max_actions + 1))
    nxt = rng.integers(0, n_s, size=(n_s, n_a))
    rew = np.round(rng.uniform(-1, 1, size=(n_s, n_a)), 3)
    return nxt, rew


def value_iteration(nxt, rew, gamma, tol=1e-13, terminal=()):
    """Q* of a deterministic MDP; transitions into ``terminal`` do not bootstrap."""
    n_s, n_a = rew.shape
    term = np.zeros(n_s, dtype=bool)
    term[list(terminal)] = True
    q = np.zeros((n_s, n_a))
    while True:
        v = np.where(term, 0.0, q.max(axis=1))
        new = rew + gamma * v[nxt]
        if np.max(np.abs(new - q)) < tol:
            return new
        q = new


# --- formation game -------------------------------------------------------------

def utility(values, a, i):
    """Payoff of player i in adjacency ``a`` given a full value tensor function."""
    return float(sum(a[i, j] * values(i, j, a) for j in range(a.shape[0]) if j != i))


def nash_oracle(values, a, weights=(1.0,)) -> bool:
    """Enumerate every row each player could pick; compare payoffs directly."""
    n = a.shape[0]
    levels = (0.0,) + tuple(weights)
    for i in range(n):
        base = utility(values, a, i)
        others = [j for j in range(n) if j != i]
        for choice in itertools.product(levels, repeat=len(others)):
            b = a.copy()
            b[i, others] = choice
            if utility(values, b, i) > base + 1e-12:
                return False
    return True


def pairwise_oracle(values, a, weights=(1.0,)) -> bool:
    n = a.shape[0]
    for i in range(n):
        for j in range(n):
            if i != j and a[i, j] > 0:
                b = a.copy()
                b[i, j] = 0.0
                if utility(values, b, i) > utility(values, a, i) + 1e-12:
                    return False
    for i, j in itertools.combinations(range(n), 2):
        if a[i, j] > 0 or a[j, i] > 0:
            continue
        for w in weights:
            b = a.copy()
            b[i, j] = b[j, i] = w
            gi = utility(values, b, i) - utility(values, a, i)
            gj = utility(values, b, j) - utility(values, a, j)
            if (gi > 1e-12 and gj >= -1e-12) or (gj > 1e-12 and gi >= -1e-12):
                return False
    return True
