"""Value-semantic graphs plus the structural metrics used by network attacks.

Every metric works on the undirected view of the graph: a directed edge
``u -> v`` makes ``u`` and ``v`` neighbours. Rankings are returned in
descending score order with ties broken by ascending node id.
"""

from __future__ import annotations

import csv
from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Mapping

from .errors import DomainError, NotFoundError


@dataclass(frozen=True)
class Edge:
    u: int
    v: int
    weight: float = 1.0
    directed: bool = False

    @property
    def key(self) -> tuple:
        if self.directed:
            return (self.u, self.v, True)
        return (min(self.u, self.v), max(self.u, self.v), False)


@dataclass(frozen=True)
class Graph:
    nodes: tuple[int, ...]
    edges: tuple[Edge, ...] = ()
    attributes: Mapping[int, tuple[float, ...]] = field(default_factory=dict)

    def __post_init__(self):
        nodes = tuple(sorted(set(int(n) for n in self.nodes)))
        if len(nodes) != len(self.nodes):
            raise ValueError("duplicate node ids")
        object.__setattr__(self, "nodes", nodes)
        node_set = set(nodes)
        seen: set[tuple] = set()
        for e in self.edges:
            if e.u == e.v:
                raise ValueError(f"self-loop on node {e.u}")
            if e.u not in node_set or e.v not in node_set:
                raise ValueError(f"edge {e.u}-{e.v} references a missing node")
            if e.key in seen:
                raise ValueError(f"duplicate edge {e.u}-{e.v}")
            seen.add(e.key)
        object.__setattr__(self, "edges", tuple(sorted(self.edges, key=lambda e: e.key)))
        object.__setattr__(self, "_adj", _neighbours(nodes, self.edges))

    @classmethod
    def from_edges(cls, pairs: Iterable, nodes: Iterable[int] | None = None,
                   directed: bool = False) -> "Graph":
        edges = []
        found: set[int] = set()
        for p in pairs:
            u, v = int(p[0]), int(p[1])
            w = float(p[2]) if len(p) > 2 else 1.0
            edges.append(Edge(u, v, w, directed))
            found.update((u, v))
        all_nodes = set(found) if nodes is None else set(int(n) for n in nodes) | found
        return cls(tuple(all_nodes), tuple(edges))

    @property
    def n(self) -> int:
        return len(self.nodes)

    def has_node(self, v: int) -> bool:
        return v in self._adj

    def neighbours(self, v: int) -> frozenset[int]:
        return self._adj[v]

    def has_edge(self, u: int, v: int) -> bool:
        return v in self._adj.get(u, ())

    def degree(self, v: int) -> int:
        return len(self._adj[v])

    def adjacency(self) -> list[list[int]]:
        """0/1 matrix of the undirected view, indexed by position in ``nodes``."""
        pos = {v: i for i, v in enumerate(self.nodes)}
        m = [[0] * self.n for _ in range(self.n)]
        for v in self.nodes:
            for w in self._adj[v]:
                m[pos[v]][pos[w]] = 1
        return m

    def relabel(self, mapping: Mapping[int, int]) -> "Graph":
        edges = tuple(Edge(mapping[e.u], mapping[e.v], e.weight, e.directed) for e in self.edges)
        attrs = {mapping[k]: v for k, v in self.attributes.items()}
        return Graph(tuple(mapping[v] for v in self.nodes), edges, attrs)


def _neighbours(nodes, edges) -> dict[int, frozenset[int]]:
    adj: dict[int, set[int]] = {v: set() for v in nodes}
    for e in edges:
        adj[e.u].add(e.v)
        adj[e.v].add(e.u)
    return {v: frozenset(s) for v, s in adj.items()}


@dataclass(frozen=True)
class ComponentDecomposition:
    components: tuple[frozenset[int], ...]

    @property
    def sizes(self) -> list[int]:
        return [len(c) for c in self.components]

    @property
    def n(self) -> int:
        return sum(self.sizes)


def components(g: Graph) -> ComponentDecomposition:
    """Weakly connected components, ordered by their smallest member."""
    seen: set[int] = set()
    out = []
    for start in g.nodes:
        if start in seen:
            continue
        comp = {start}
        queue = deque([start])
        while queue:
            v = queue.popleft()
            for w in g.neighbours(v):
                if w not in comp:
                    comp.add(w)
                    queue.append(w)
        seen |= comp
        out.append(frozenset(comp))
    return ComponentDecomposition(tuple(out))


def fragmentation_fraction(g: Graph) -> Fraction:
    n = g.n
    if n < 2:
        raise DomainError("fragmentation needs at least 2 nodes")
    linked = sum(s * (s - 1) for s in components(g).sizes)
    return 1 - Fraction(linked, n * (n - 1))


def fragmentation(g: Graph) -> float:
    """``1 - sum_k s_k (s_k - 1) / (n (n - 1))``: 0 when connected, 1 when edgeless."""
    return float(fragmentation_fraction(g))


def global_clustering(g: Graph) -> float:
    """Transitivity: 3 x triangles / connected triples (0 without triples)."""
    closed = 0
    triples = 0
    for v in g.nodes:
        nb = sorted(g.neighbours(v))
        k = len(nb)
        triples += k * (k - 1) // 2
        for i in range(k):
            for j in range(i + 1, k):
                if g.has_edge(nb[i], nb[j]):
                    closed += 1
    # each triangle is counted once per corner, i.e. 3 x triangles already
    return closed / triples if triples else 0.0


def betweenness(g: Graph) -> dict[int, Fraction]:
    """Exact shortest-path betweenness (Brandes), undirected, unnormalised.

    Each unordered pair contributes once; values are exact fractions.
    """
    score = {v: Fraction(0) for v in g.nodes}
    for s in g.nodes:
        stack = []
        preds: dict[int, list[int]] = {v: [] for v in g.nodes}
        sigma = {v: 0 for v in g.nodes}
        dist = {v: -1 for v in g.nodes}
        sigma[s] = 1
        dist[s] = 0
        queue = deque([s])
        while queue:
            v = queue.popleft()
            stack.append(v)
            for w in sorted(g.neighbours(v)):
                if dist[w] < 0:
                    dist[w] = dist[v] + 1
                    queue.append(w)
                if dist[w] == dist[v] + 1:
                    sigma[w] += sigma[v]
                    preds[w].append(v)
        delta = {v: Fraction(0) for v in g.nodes}
        while stack:
            w = stack.pop()
            for v in preds[w]:
                delta[v] += Fraction(sigma[v], sigma[w]) * (1 + delta[w])
            if w != s:
                score[w] += delta[w]
    return {v: c / 2 for v, c in score.items()}


def brokerage(g: Graph) -> dict[int, int]:
    """Structural-hole count: unordered neighbour pairs that are not linked."""
    out = {}
    for v in g.nodes:
        nb = sorted(g.neighbours(v))
        open_pairs = 0
        for i in range(len(nb)):
            for j in range(i + 1, len(nb)):
                if not g.has_edge(nb[i], nb[j]):
                    open_pairs += 1
        out[v] = open_pairs
    return out


def _rank(scores: Mapping[int, object]) -> list[int]:
    return sorted(scores, key=lambda v: (-scores[v], v))


def betweenness_ranking(g: Graph) -> list[int]:
    return _rank(betweenness(g))


def brokerage_ranking(g: Graph) -> list[int]:
    return _rank(brokerage(g))


def remove_node(g: Graph, node: int) -> Graph:
    if not g.has_node(node):
        raise NotFoundError(f"node {node} not in graph")
    edges = tuple(e for e in g.edges if node not in (e.u, e.v))
    attrs = {k: v for k, v in g.attributes.items() if k != node}
    return Graph(tuple(v for v in g.nodes if v != node), edges, attrs)


def remove_edge(g: Graph, u: int, v: int) -> Graph:
    """Drop the edge between ``u`` and ``v`` (a directed edge must match its direction)."""
    keep = []
    hit = False
    for e in g.edges:
        if not hit and ((e.u, e.v) == (u, v) or (not e.directed and (e.u, e.v) == (v, u))):
            hit = True
            continue
        keep.append(e)
    if not hit:
        raise NotFoundError(f"edge {u}-{v} not in graph")
    return Graph(g.nodes, tuple(keep), g.attributes)


def read_edge_list(path, directed: bool = False, attributes_csv=None) -> Graph:
    """Parse ``from to [weight]`` lines (``#`` starts a comment).

    ``attributes_csv`` optionally names a ``node_id,f1,f2,...`` file; nodes
    listed there but absent from the edge list become isolated nodes.
    """
    pairs = []
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) not in (2, 3):
                raise ValueError(f"{path}:{lineno}: expected 'from to [weight]'")
            try:
                pairs.append((int(parts[0]), int(parts[1]), *(float(p) for p in parts[2:])))
            except ValueError as exc:
                raise ValueError(f"{path}:{lineno}: {exc}") from None
    attrs = read_node_attributes(attributes_csv) if attributes_csv else {}
    g = Graph.from_edges(pairs, nodes=attrs.keys(), directed=directed)
    return Graph(g.nodes, g.edges, attrs)


def read_node_attributes(path) -> dict[int, tuple[float, ...]]:
    out = {}
    with open(path, newline="", encoding="utf-8") as fh:
        for row in csv.reader(fh):
            if not row or row[0].strip().startswith("#"):
                continue
            if row[0].strip() == "node_id":
                continue
            out[int(row[0])] = tuple(float(x) for x in row[1:])
    return out


def write_edge_list(g: Graph, path) -> None:
    lines = [f"{e.u} {e.v} {e.weight:g}" for e in g.edges]
    Path(path).write_text("\n".join(lines) + ("\n" if lines else ""), encoding="utf-8")


def targeted_removal(g: Graph, ranking, steps: int) -> list[tuple[int, float]]:
    """Repeatedly remove the top node of ``ranking(g)``, recomputed after every removal.

    Returns ``(node, fragmentation after removal)`` per step; stops early
    when fewer than two nodes would remain.
    """
    out = []
    for _ in range(steps):
        if g.n < 3:
            break
        node = ranking(g)[0]
        g = remove_node(g, node)
        out.append((node, fragmentation(g)))
    return out
