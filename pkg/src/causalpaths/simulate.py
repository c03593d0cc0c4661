"""Seeded simulation of standardized Gaussian datasets from a weighted
model, plus threshold selection for sampling-bias demonstrations.

Values are generated in topological order (each node is its parents'
weighted sum plus a Gaussian error; errors of bidirected pairs are
correlated).  Variates come from counter-based Philox streams keyed by
(seed, node index, chunk index) and an inverse-CDF transform, so a given
seed reproduces the same dataset chunk by chunk.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtri

from .errors import NotPSD, UnknownNode
from .graph import Edge, topological_order
from .sem import WeightedModel

CHUNK_ROWS = 1 << 18
_MASK32 = (1 << 32) - 1


@dataclass
class Dataset:
    """Columnar numeric data with generation provenance."""

    columns: dict[str, np.ndarray]
    n: int
    seed: int
    provenance: str

    def __post_init__(self):
        for name, col in self.columns.items():
            if len(col) != self.n:
                raise ValueError(f"column {name!r} has {len(col)} rows, expected {self.n}")
            if not np.all(np.isfinite(col)):
                raise ValueError(f"column {name!r} contains non-finite values")

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(self.columns)


@dataclass(frozen=True)
class SelectionRule:
    """Keep rows where ``node <op> threshold`` (op is '>' or '<')."""

    node: str
    op: str
    threshold: float

    def __post_init__(self):
        if self.op not in (">", "<"):
            raise ValueError(f"selection operator must be '>' or '<', got {self.op!r}")
        if not math.isfinite(self.threshold):
            raise ValueError("selection threshold must be finite")

    def describe(self) -> str:
        return f"{self.node}{self.op}{self.threshold!r}"


def psd_lower_cholesky(a: np.ndarray, tol: float = 1e-10) -> np.ndarray:
    """Lower-triangular factor L with L @ L.T == a for PSD ``a``.

    Unlike a plain Cholesky this tolerates zero pivots (singular PSD
    matrices), which occur whenever a standardized node has no error term.
    """
    a = np.asarray(a, dtype=float)
    k = a.shape[0]
    low = np.zeros((k, k))
    for j in range(k):
        d = a[j, j] - float(low[j, :j] @ low[j, :j])
        if d < -1e-8:
            raise NotPSD("matrix is not positive semidefinite")
        if d <= tol:
            # zero pivot: the rest of the column must vanish for PSD input
            for i in range(j + 1, k):
                if abs(a[i, j] - float(low[i, :j] @ low[j, :j])) > 1e-6:
                    raise NotPSD("matrix is not positive semidefinite")
            continue
        low[j, j] = math.sqrt(d)
        for i in range(j + 1, k):
            low[i, j] = (a[i, j] - float(low[i, :j] @ low[j, :j])) / low[j, j]
    return low


def _normal_chunk(seed: int, node_index: int, chunk_index: int, size: int) -> np.ndarray:
    key = np.array(
        [seed & (2**64 - 1), ((node_index & _MASK32) << 32) | (chunk_index & _MASK32)],
        dtype=np.uint64,
    )
    gen = np.random.Generator(np.random.Philox(key=key))
    ticks = gen.integers(0, 1 << 53, size=size, dtype=np.uint64)
    # (k + 0.5) / 2^53 lies strictly inside (0, 1), so ndtri stays finite
    return ndtri((ticks.astype(np.float64) + 0.5) * 2.0**-53)


def simulate(m: WeightedModel, n: int, seed: int = 0, chunk_rows: int = CHUNK_ROWS) -> Dataset:
    """Draw ``n`` rows from the model; deterministic for a fixed seed.

    Chunks are generated from independent keyed streams and concatenated
    in chunk order, so the result does not depend on scheduling.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    g = m.graph
    k = len(g.nodes)
    low = psd_lower_cholesky(m.error_covariance())
    order = topological_order(g)

    out = np.empty((n, k))
    start = 0
    chunk_index = 0
    while start < n:
        rows = min(chunk_rows, n - start)
        raw = np.empty((rows, k))
        for j in range(k):
            raw[:, j] = _normal_chunk(seed, j, chunk_index, rows)
        errors = raw @ low.T
        block = out[start : start + rows]
        for node in order:
            i = g.index(node)
            block[:, i] = errors[:, i]
            for parent in g.sorted_nodes(g.parents(node)):
                p = g.index(parent)
                block[:, i] += m.coef[Edge(parent, node)] * block[:, p]
        start += rows
        chunk_index += 1

    columns = {name: out[:, g.index(name)].copy() for name in g.nodes}
    for col in columns.values():
        col.flags.writeable = False
    provenance = f"simulate(n={n}, seed={seed}) of model on [{', '.join(g.nodes)}]"
    return Dataset(columns=columns, n=n, seed=seed, provenance=provenance)


def select(d: Dataset, rule: SelectionRule) -> Dataset:
    """Rows of ``d`` passing the selection rule; may keep zero rows."""
    if rule.node not in d.columns:
        raise UnknownNode(f"dataset has no column {rule.node!r}")
    col = d.columns[rule.node]
    mask = col > rule.threshold if rule.op == ">" else col < rule.threshold
    kept = int(mask.sum())
    columns = {name: values[mask] for name, values in d.columns.items()}
    provenance = f"{d.provenance}; select {rule.describe()} kept {kept} of {d.n}"
    return Dataset(columns=columns, n=kept, seed=d.seed, provenance=provenance)
