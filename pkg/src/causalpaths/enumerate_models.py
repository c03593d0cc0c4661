"""Enumeration of the acyclic orientations of an undirected skeleton, and
per-orientation fitting with queried causal effects.

Complete skeletons over highly correlated variables fit every orientation
equally well, so the tabulated effects are what distinguish the models.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import DuplicateEdge, SelfLoop, TooManyOrientations
from .fitting import FitResult, fit
from .graph import CausalGraph, Edge, topological_order
from .sem import CorrelationMatrix, total_effect

DEFAULT_ORIENTATION_CAP = 50_000


@dataclass(frozen=True)
class ModelEntry:
    label: str
    graph: CausalGraph
    fit: FitResult
    effects: dict[tuple[str, str, frozenset[str]], float]


@dataclass(frozen=True)
class EnumerationResult:
    nodes: tuple[str, ...]
    skeleton: tuple[tuple[str, str], ...]
    models: tuple[ModelEntry, ...]


def _normalize_skeleton(pairs, nodes=None):
    order: list[str] = list(nodes) if nodes is not None else []
    seen_nodes = set(order)
    seen_pairs = set()
    normalized = []
    for a, b in pairs:
        if a == b:
            raise SelfLoop(f"skeleton pair ({a!r}, {b!r}) is a self-pair")
        key = frozenset((a, b))
        if key in seen_pairs:
            raise DuplicateEdge(f"duplicate skeleton pair ({a}, {b})")
        seen_pairs.add(key)
        for name in (a, b):
            if name not in seen_nodes:
                seen_nodes.add(name)
                order.append(name)
        normalized.append((a, b))
    return tuple(order), tuple(normalized)


def enumerate_orientations(skeleton, cap: int = DEFAULT_ORIENTATION_CAP, nodes=None) -> list[CausalGraph]:
    """All acyclic orientations of the skeleton, each exactly once.

    The order is deterministic: orientations that keep later-declared
    nodes downstream come first, so the identity-ordered orientation is
    first and the fully reversed one is last.
    """
    if cap < 1:
        raise ValueError("cap must be at least 1")
    node_order, pairs = _normalize_skeleton(skeleton, nodes)
    index = {n: i for i, n in enumerate(node_order)}

    children: dict[str, set[str]] = {n: set() for n in node_order}
    chosen: list[Edge] = []
    found: list[tuple[tuple[int, ...], list[Edge]]] = []

    def reaches(start, goal):
        stack = [start]
        seen = {start}
        while stack:
            cur = stack.pop()
            if cur == goal:
                return True
            for nxt in children[cur]:
                if nxt not in seen:
                    seen.add(nxt)
                    stack.append(nxt)
        return False

    def assign(i, bits):
        if i == len(pairs):
            found.append((tuple(bits), list(chosen)))
            if len(found) > cap:
                raise TooManyOrientations(
                    f"skeleton admits more than {cap} acyclic orientations"
                )
            return
        a, b = pairs[i]
        for bit, (src, dst) in enumerate(((a, b), (b, a))):
            if reaches(dst, src):
                continue  # src -> dst would close a cycle
            children[src].add(dst)
            chosen.append(Edge(src, dst))
            assign(i + 1, bits + [bit])
            chosen.pop()
            children[src].remove(dst)

    assign(0, [])

    graphs = []
    for bits, edges in found:
        g = CausalGraph(node_order, edges)
        topo = topological_order(g)
        key = (tuple(-index[v] for v in reversed(topo)), bits)
        graphs.append((key, g))
    graphs.sort(key=lambda item: item[0])
    return [g for _, g in graphs]


def enumerate_and_fit(
    skeleton,
    R: CorrelationMatrix,
    queries,
    cap: int = DEFAULT_ORIENTATION_CAP,
    nodes=None,
) -> EnumerationResult:
    """Fit every acyclic orientation to ``R`` and tabulate the queried
    total effects (optionally with nodes held fixed by intervention)."""
    normalized_queries = []
    for exposure, outcome, fixed in queries:
        if exposure == outcome:
            raise ValueError("query exposure and outcome must differ")
        normalized_queries.append((exposure, outcome, frozenset(fixed)))

    node_order, pairs = _normalize_skeleton(skeleton, nodes)
    orientations = enumerate_orientations(pairs, cap=cap, nodes=node_order)

    labels: dict[str, int] = {}
    models = []
    for g in orientations:
        label = ",".join(topological_order(g))
        labels[label] = labels.get(label, 0) + 1
        if labels[label] > 1:
            label = f"{label}#{labels[label]}"
        result = fit(g, R)
        effects = {
            (exposure, outcome, fixed): total_effect(result.model, exposure, outcome, fixed).total
            for exposure, outcome, fixed in normalized_queries
        }
        models.append(ModelEntry(label=label, graph=g, fit=result, effects=effects))
    return EnumerationResult(nodes=node_order, skeleton=pairs, models=tuple(models))
