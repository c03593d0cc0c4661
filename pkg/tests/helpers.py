"""Shared test utilities: random graphs/models and independent oracles.

The oracles here deliberately use different algorithms than the library
(exhaustive path search, permutation checks, precision-matrix partial
correlations) so tests cross-check rather than mirror the implementation.
"""

from __future__ import annotations

import itertools
from pathlib import Path

import numpy as np

from causalpaths import (
    CausalGraph,
    Edge,
    InfeasibleStandardization,
    NotPSD,
    WeightedModel,
    attach_weights,
    bidirected,
    build_graph,
    directed,
)

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"


def fixture_text(name: str) -> str:
    return (FIXTURES / name).read_text(encoding="utf-8")


def fig_names(k: int) -> list[str]:
    return [f"N{i}" for i in range(k)]


def random_dag(rng: np.random.Generator, n_nodes: int, p: float = 0.4) -> CausalGraph:
    """DAG over N0..N{k-1} whose edges always point from lower to higher
    index under a random node relabeling."""
    names = fig_names(n_nodes)
    perm = list(rng.permutation(n_nodes))
    edges = []
    for i in range(n_nodes):
        for j in range(i + 1, n_nodes):
            if rng.random() < p:
                edges.append(directed(names[perm[i]], names[perm[j]]))
    return build_graph(names, edges)


def random_model(
    rng: np.random.Generator,
    n_nodes: int,
    p: float = 0.4,
    max_bidirected: int = 0,
    max_tries: int = 200,
) -> WeightedModel:
    """Feasible standardized model with random coefficients (rejection
    sampling keeps every implied variance at 1)."""
    for _ in range(max_tries):
        g = random_dag(rng, n_nodes, p)
        edges = list(g.edges)
        if max_bidirected:
            pairs = [
                (a, b)
                for a, b in itertools.combinations(g.nodes, 2)
                if Edge(a, b) not in edges and Edge(b, a) not in edges
            ]
            count = int(rng.integers(0, max_bidirected + 1))
            if pairs and count:
                chosen = rng.choice(len(pairs), size=min(count, len(pairs)), replace=False)
                for idx in chosen:
                    edges.append(bidirected(*pairs[idx]))
            g = build_graph(g.nodes, edges)
        coef = {}
        for e in g.edges:
            scale = 0.55 if e.is_directed else 0.3
            coef[e] = float(rng.uniform(0.15, scale) * rng.choice([-1.0, 1.0]))
        try:
            return attach_weights(g, coef)
        except (InfeasibleStandardization, NotPSD):
            continue
    raise AssertionError("could not sample a feasible model")


# --------------------------------------------------------------------------
# oracles
# --------------------------------------------------------------------------


def oracle_reachable(g: CausalGraph, start: str) -> set[str]:
    """Reachability by exhaustive enumeration of simple directed paths."""
    out: set[str] = set()

    def walk(node, seen):
        for child in g.children(node):
            if child not in seen:
                out.add(child)
                walk(child, seen | {child})

    walk(start, {start})
    return out


def oracle_is_acyclic(nodes, directed_pairs) -> bool:
    """A digraph is acyclic iff some node permutation orients every edge
    forward (checked over all permutations)."""
    for perm in itertools.permutations(nodes):
        rank = {n: i for i, n in enumerate(perm)}
        if all(rank[a] < rank[b] for a, b in directed_pairs):
            return True
    return False


def partial_correlation(R, u: str, v: str, given) -> float:
    """Partial correlation from the precision matrix of the submatrix over
    {u, v} and the conditioning set."""
    names = [u, v] + sorted(given)
    sub = R.submatrix(names)
    precision = np.linalg.pinv(sub)
    denom = np.sqrt(precision[0, 0] * precision[1, 1])
    if denom == 0:
        return 0.0
    return float(-precision[0, 1] / denom)


def sample_correlation(x: np.ndarray, y: np.ndarray) -> float:
    return float(np.corrcoef(x, y)[0, 1])
