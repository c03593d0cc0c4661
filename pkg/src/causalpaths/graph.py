"""Causal graph data model: nodes, directed/bidirected edges, validation,
reachability and ordering primitives.

Graphs are immutable after construction.  Node declaration order is
preserved and acts as the tie-breaker for every deterministic output
(topological order, edge listings, report rows).
"""

from __future__ import annotations

import heapq
import re
from dataclasses import dataclass

from .errors import (
    CycleError,
    DuplicateEdge,
    DuplicateNode,
    InvalidName,
    SelfLoop,
    UnknownNode,
)

DIRECTED = "directed"
BIDIRECTED = "bidirected"

_NAME_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_]*\Z")


def check_node_name(name: str) -> str:
    if not isinstance(name, str) or not _NAME_RE.match(name):
        raise InvalidName(f"invalid node name: {name!r}")
    return name


@dataclass(frozen=True)
class Edge:
    """A directed (source -> target) or bidirected (source <-> target) edge.

    Bidirected edges are stored with endpoints in lexicographic order so an
    edge equals its endpoint-swapped form.
    """

    source: str
    target: str
    kind: str = DIRECTED

    def __post_init__(self):
        if self.kind not in (DIRECTED, BIDIRECTED):
            raise ValueError(f"unknown edge kind: {self.kind!r}")
        if self.source == self.target:
            raise SelfLoop(f"self-loop on node {self.source!r}")
        if self.kind == BIDIRECTED and self.source > self.target:
            lo, hi = self.target, self.source
            object.__setattr__(self, "source", lo)
            object.__setattr__(self, "target", hi)

    @property
    def is_directed(self) -> bool:
        return self.kind == DIRECTED

    def other(self, node: str) -> str:
        if node == self.source:
            return self.target
        if node == self.target:
            return self.source
        raise UnknownNode(f"node {node!r} is not an endpoint of {self}")

    def touches(self, node: str) -> bool:
        return node in (self.source, self.target)

    def arrow_at(self, node: str) -> bool:
        """True when this edge carries an arrowhead at ``node``."""
        if self.kind == BIDIRECTED:
            return self.touches(node)
        return node == self.target

    def __str__(self):
        glyph = "->" if self.is_directed else "<->"
        return f"{self.source} {glyph} {self.target}"


def directed(source: str, target: str) -> Edge:
    return Edge(source, target, DIRECTED)


def bidirected(a: str, b: str) -> Edge:
    return Edge(a, b, BIDIRECTED)


class CausalGraph:
    """Validated mixed graph whose directed part is acyclic."""

    __slots__ = ("nodes", "edges", "_index", "_parents", "_children", "_incident")

    def __init__(self, nodes, edges=()):
        node_list = []
        index = {}
        for name in nodes:
            check_node_name(name)
            if name in index:
                raise DuplicateNode(f"node {name!r} declared twice")
            index[name] = len(node_list)
            node_list.append(name)

        seen = set()
        edge_list = []
        parents = {n: [] for n in node_list}
        children = {n: [] for n in node_list}
        incident = {n: [] for n in node_list}
        for edge in edges:
            for endpoint in (edge.source, edge.target):
                if endpoint not in index:
                    raise UnknownNode(f"edge {edge} uses undeclared node {endpoint!r}")
            if edge in seen:
                raise DuplicateEdge(f"duplicate edge {edge}")
            seen.add(edge)
            edge_list.append(edge)
            if edge.is_directed:
                parents[edge.target].append(edge.source)
                children[edge.source].append(edge.target)
            incident[edge.source].append(edge)
            incident[edge.target].append(edge)

        object.__setattr__(self, "nodes", tuple(node_list))
        object.__setattr__(self, "edges", tuple(edge_list))
        object.__setattr__(self, "_index", index)
        object.__setattr__(self, "_parents", {n: tuple(v) for n, v in parents.items()})
        object.__setattr__(self, "_children", {n: tuple(v) for n, v in children.items()})
        object.__setattr__(self, "_incident", {n: tuple(v) for n, v in incident.items()})
        cycle = self._find_cycle()
        if cycle is not None:
            raise CycleError(cycle)

    def __setattr__(self, name, value):
        raise AttributeError("CausalGraph is immutable")

    def _find_cycle(self):
        # iterative DFS over the directed part; returns one cycle or None
        color = {n: 0 for n in self.nodes}  # 0 new, 1 on stack, 2 done
        pred = {}
        for root in self.nodes:
            if color[root]:
                continue
            stack = [(root, iter(self._children[root]))]
            color[root] = 1
            while stack:
                node, it = stack[-1]
                advanced = False
                for child in it:
                    if color[child] == 1:
                        return self._trace(pred, node, child)
                    if color[child] == 0:
                        color[child] = 1
                        pred[child] = node
                        stack.append((child, iter(self._children[child])))
                        advanced = True
                        break
                if not advanced:
                    color[node] = 2
                    stack.pop()
        return None

    @staticmethod
    def _trace(pred, node, child):
        cycle = [node]
        cur = node
        while cur != child:
            cur = pred[cur]
            cycle.append(cur)
        cycle.reverse()
        cycle.append(cycle[0])
        return cycle

    # -- lookups ----------------------------------------------------------
    def index(self, node: str) -> int:
        try:
            return self._index[node]
        except KeyError:
            raise UnknownNode(f"unknown node {node!r}") from None

    def __contains__(self, node: str) -> bool:
        return node in self._index

    def __len__(self) -> int:
        return len(self.nodes)

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, CausalGraph)
            and self.nodes == other.nodes
            and set(self.edges) == set(other.edges)
        )

    def __hash__(self):
        return hash((self.nodes, frozenset(self.edges)))

    def __repr__(self):
        return f"CausalGraph(nodes={list(self.nodes)!r}, edges={len(self.edges)})"

    @property
    def directed_edges(self) -> tuple[Edge, ...]:
        return tuple(e for e in self.edges if e.is_directed)

    @property
    def bidirected_edges(self) -> tuple[Edge, ...]:
        return tuple(e for e in self.edges if not e.is_directed)

    def incident(self, node: str) -> tuple[Edge, ...]:
        self.index(node)
        return self._incident[node]

    def parents(self, node: str) -> set[str]:
        self.index(node)
        return set(self._parents[node])

    def children(self, node: str) -> set[str]:
        self.index(node)
        return set(self._children[node])

    def ancestors(self, node: str) -> set[str]:
        return self._closure(node, self._parents)

    def descendants(self, node: str) -> set[str]:
        return self._closure(node, self._children)

    def _closure(self, node, step):
        self.index(node)
        out: set[str] = set()
        frontier = [node]
        while frontier:
            cur = frontier.pop()
            for nxt in step[cur]:
                if nxt not in out:
                    out.add(nxt)
                    frontier.append(nxt)
        out.discard(node)
        return out

    def sorted_nodes(self, nodes) -> list[str]:
        """Sort a collection of node names by declaration order."""
        return sorted(nodes, key=self.index)

    def sorted_edges(self, edges=None) -> list[Edge]:
        pool = self.edges if edges is None else edges
        kind_rank = {DIRECTED: 0, BIDIRECTED: 1}
        return sorted(
            pool,
            key=lambda e: (self.index(e.source), self.index(e.target), kind_rank[e.kind]),
        )

    def replace_edges(self, edges) -> "CausalGraph":
        """New graph with the same node declaration and different edges."""
        return CausalGraph(self.nodes, edges)


def build_graph(nodes, edges) -> CausalGraph:
    """Validate and build a causal graph.

    Raises CycleError / DuplicateEdge / SelfLoop / UnknownNode /
    DuplicateNode / InvalidName on bad input.
    """
    return CausalGraph(nodes, edges)


def topological_order(g: CausalGraph) -> list[str]:
    """Directed-edge-respecting order; ties broken by declaration order."""
    indegree = {n: len(g.parents(n)) for n in g.nodes}
    ready = [g.index(n) for n in g.nodes if indegree[n] == 0]
    heapq.heapify(ready)
    out = []
    while ready:
        node = g.nodes[heapq.heappop(ready)]
        out.append(node)
        for child in g.sorted_nodes(g.children(node)):
            indegree[child] -= 1
            if indegree[child] == 0:
                heapq.heappush(ready, g.index(child))
    # acyclicity is guaranteed at construction
    assert len(out) == len(g.nodes)
    return out


RELATIONS = ("parents", "children", "ancestors", "descendants")


def relatives(g: CausalGraph, node: str, relation: str) -> set[str]:
    """Directed-edge relatives of ``node``: parents, children, ancestors
    or descendants (transitive closures exclude the node itself)."""
    if relation not in RELATIONS:
        raise ValueError(f"relation must be one of {RELATIONS}, got {relation!r}")
    return getattr(g, relation)(node)
