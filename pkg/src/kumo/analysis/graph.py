"""Truth co-occurrence graphs, modularity, and Louvain communities.

The domain graph joins two truths whenever they appear together in the
same state's rule-out set of some action. Louvain greedily optimizes the
standard modularity

    Q = (1/2m) * sum_ij [A_ij - k_i*k_j/(2m)] * delta(c_i, c_j)

by local node moves followed by community aggregation, repeated until no
move improves Q. Determinism: the node visit order is shuffled once from
the given seed and then fixed, and equal-gain moves resolve to the lowest
community id.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from typing import Mapping, Sequence

from ..envmodel import SeedConfig
from ..errors import EmptyGraph


@dataclass(frozen=True)
class DomainGraph:
    """Simple undirected graph over named nodes (no self-loops)."""

    nodes: tuple[str, ...]
    edges: tuple[tuple[str, str], ...]  # each sorted (u, v), u < v, deduped

    @property
    def m(self) -> int:
        return len(self.edges)

    def adjacency(self) -> dict[str, set[str]]:
        adj: dict[str, set[str]] = {n: set() for n in self.nodes}
        for u, v in self.edges:
            adj[u].add(v)
            adj[v].add(u)
        return adj

    def degrees(self) -> dict[str, int]:
        deg = {n: 0 for n in self.nodes}
        for u, v in self.edges:
            deg[u] += 1
            deg[v] += 1
        return deg


def graph_from_edges(nodes: Sequence[str], pairs) -> DomainGraph:
    node_set = set(nodes)
    edges = set()
    for u, v in pairs:
        if u == v:
            continue  # no self-loops
        assert u in node_set and v in node_set
        edges.add((u, v) if u < v else (v, u))
    return DomainGraph(nodes=tuple(nodes), edges=tuple(sorted(edges)))


def build_domain_graph(cfg: SeedConfig) -> DomainGraph:
    """Connect truth pairs co-occurring in one state's rule-out set."""
    pairs = []
    for spec in cfg.actions:
        for state in spec.states:
            ruled = state.ruled_out
            for i in range(len(ruled)):
                for j in range(i + 1, len(ruled)):
                    pairs.append((ruled[i], ruled[j]))
    return graph_from_edges(cfg.truths, pairs)


@dataclass(frozen=True)
class Partition:
    communities: Mapping[str, int]  # node -> community id
    q: float


def modularity(graph: DomainGraph, communities: Mapping[str, int]) -> float:
    """Plain (unweighted) modularity; defined as 0 for an edgeless graph."""
    m = graph.m
    if m == 0:
        return 0.0
    deg = graph.degrees()
    adj = graph.adjacency()
    q = 0.0
    for u in graph.nodes:
        for v in graph.nodes:
            if communities[u] != communities[v]:
                continue
            a_uv = 1.0 if v in adj[u] else 0.0
            q += a_uv - deg[u] * deg[v] / (2.0 * m)
    return q / (2.0 * m)


class _WeightedGraph:
    """Aggregation-level graph: symmetric weights, loops stored once."""

    def __init__(self, n: int):
        self.n = n
        self.weights: list[dict[int, float]] = [dict() for _ in range(n)]
        self.loops = [0.0] * n

    def add_edge(self, u: int, v: int, w: float):
        if u == v:
            self.loops[u] += w
        else:
            self.weights[u][v] = self.weights[u].get(v, 0.0) + w
            self.weights[v][u] = self.weights[v].get(u, 0.0) + w

    def strength(self, u: int) -> float:
        return sum(self.weights[u].values()) + 2.0 * self.loops[u]

    @property
    def total_weight(self) -> float:
        inter = sum(sum(d.values()) for d in self.weights) / 2.0
        return inter + sum(self.loops)


def _one_level(
    g: _WeightedGraph, order: Sequence[int], min_gain: float = 1e-12
) -> tuple[list[int], bool]:
    """Phase 1: greedy local moves until a full pass changes nothing.

    Returns (community per node, whether any move happened). A node moves
    only on a strict gain over staying put; among equal best gains the
    lowest community id wins (the ascending scan with a strict comparison
    keeps the first, i.e. lowest, maximizer).
    """
    m = g.total_weight
    comm = list(range(g.n))
    k = [g.strength(u) for u in range(g.n)]
    tot = k[:]  # sum of strengths per community
    improved = False
    moved = True
    while moved:
        moved = False
        for u in order:
            cu = comm[u]
            # Weight from u into each adjacent community (loops excluded).
            links: dict[int, float] = {}
            for v, w in g.weights[u].items():
                links[comm[v]] = links.get(comm[v], 0.0) + w
            tot[cu] -= k[u]
            best_comm = cu
            best_gain = links.get(cu, 0.0) - tot[cu] * k[u] / (2.0 * m)
            for c in sorted(links):
                if c == cu:
                    continue
                gain = links[c] - tot[c] * k[u] / (2.0 * m)
                if gain > best_gain + min_gain:
                    best_comm, best_gain = c, gain
            tot[best_comm] += k[u]
            if best_comm != cu:
                comm[u] = best_comm
                moved = True
                improved = True
    return comm, improved


def _aggregate(g: _WeightedGraph, comm: Sequence[int]) -> tuple[_WeightedGraph, dict[int, int]]:
    ids = sorted(set(comm))
    remap = {c: i for i, c in enumerate(ids)}
    agg = _WeightedGraph(len(ids))
    for u in range(g.n):
        cu = remap[comm[u]]
        agg.loops[cu] += g.loops[u]
        for v, w in g.weights[u].items():
            if v < u:
                continue
            cv = remap[comm[v]]
            agg.add_edge(cu, cv, w)
    return agg, remap


def louvain(graph: DomainGraph, rng_seed: int = 0) -> Partition:
    """Greedy modularity optimization; requires at least one edge."""
    if graph.m == 0:
        raise EmptyGraph("louvain needs a graph with at least one edge")
    index = {n: i for i, n in enumerate(graph.nodes)}
    g = _WeightedGraph(len(graph.nodes))
    for u, v in graph.edges:
        g.add_edge(index[u], index[v], 1.0)

    order = list(range(g.n))
    random.Random(f"louvain:{rng_seed}").shuffle(order)

    # assignment[i] = node id of original node i in the current level's graph
    assignment = list(range(g.n))
    while True:
        comm, improved = _one_level(g, order)
        if not improved:
            break
        g, remap = _aggregate(g, comm)
        assignment = [remap[comm[a]] for a in assignment]
        order = list(range(g.n))  # aggregate levels visit supernodes by id

    # Compact, order-stable community ids.
    relabel: dict[int, int] = {}
    communities: dict[str, int] = {}
    for node in graph.nodes:
        c = assignment[index[node]]
        if c not in relabel:
            relabel[c] = len(relabel)
        communities[node] = relabel[c]
    return Partition(communities=communities, q=modularity(graph, communities))
