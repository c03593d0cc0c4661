"""Per-equation least-squares fitting of a weighted model to an observed
correlation matrix or a raw dataset.

Each endogenous node is regressed on its parents; there is no global
optimization.  Bidirected coefficients come from the observed correlation
(exogenous pairs) or from per-equation residual covariances (raw data).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateColumn, UnknownNode, UnsupportedBidirected
from .graph import CausalGraph
from .sem import CorrelationMatrix, RegressionResult, WeightedModel, attach_weights, implied_correlations, regress


@dataclass(frozen=True)
class FitResult:
    model: WeightedModel
    per_equation: dict[str, RegressionResult]
    max_abs_residual: float


def _check_names(g: CausalGraph, names) -> None:
    available = set(names)
    for node in g.nodes:
        if node not in available:
            raise UnknownNode(f"no observed variable for node {node!r}")


def _directed_coefficients(g: CausalGraph, R: CorrelationMatrix):
    coef = {}
    per_equation = {}
    for node in g.nodes:
        parents = g.sorted_nodes(g.parents(node))
        if not parents:
            continue
        result = regress(R, node, parents)
        per_equation[node] = result
        for edge in g.directed_edges:
            if edge.target == node:
                coef[edge] = result.coefficients[edge.source]
    return coef, per_equation


def _max_abs_residual(model: WeightedModel, R: CorrelationMatrix) -> float:
    implied = implied_correlations(model)
    observed = R.submatrix(model.graph.nodes)
    return float(np.max(np.abs(observed - implied.values))) if len(model.graph.nodes) else 0.0


def fit(g: CausalGraph, R: CorrelationMatrix) -> FitResult:
    """Fit coefficients from an observed correlation matrix.

    Bidirected edges are supported only between exogenous pairs (their
    coefficient is the observed correlation); endogenous bidirected pairs
    need raw data, so use fit_from_data for those.
    """
    _check_names(g, R.names)
    coef, per_equation = _directed_coefficients(g, R)
    for edge in g.bidirected_edges:
        for endpoint in (edge.source, edge.target):
            if g.parents(endpoint):
                raise UnsupportedBidirected(
                    f"bidirected edge {edge} touches endogenous node {endpoint!r}; "
                    "fit it from raw data instead"
                )
        coef[edge] = R.r(edge.source, edge.target)
    model = attach_weights(g, coef)
    return FitResult(model, per_equation, _max_abs_residual(model, R))


def fit_from_data(g: CausalGraph, data) -> FitResult:
    """Fit coefficients from a raw dataset (see simulate.Dataset).

    Columns are standardized empirically; directed coefficients come from
    the sample correlation matrix, and bidirected coefficients between
    endogenous pairs are the covariances of the per-equation residuals on
    the standardized scale.
    """
    _check_names(g, data.columns.keys())
    names = list(g.nodes)
    n = data.n
    z = {}
    for name in names:
        col = np.asarray(data.columns[name], dtype=float)
        sd = float(col.std())
        if sd == 0.0 or not np.isfinite(sd):
            raise DegenerateColumn(f"column {name!r} has zero variance")
        z[name] = (col - col.mean()) / sd

    max_parents = max((len(g.parents(v)) for v in g.nodes), default=0)
    if n < max_parents + 2:
        raise ValueError(f"need at least {max_parents + 2} rows, got {n}")

    zmat = np.column_stack([z[name] for name in names])
    R = CorrelationMatrix(names, np.clip(zmat.T @ zmat / n, -1.0, 1.0))

    coef, per_equation = _directed_coefficients(g, R)

    if g.bidirected_edges:
        residuals = {}
        for name in names:
            parents = g.sorted_nodes(g.parents(name))
            if parents:
                beta = per_equation[name].coefficients
                residuals[name] = z[name] - sum(beta[p] * z[p] for p in parents)
            else:
                residuals[name] = z[name]
        for edge in g.bidirected_edges:
            coef[edge] = float(np.mean(residuals[edge.source] * residuals[edge.target]))

    model = attach_weights(g, coef)
    return FitResult(model, per_equation, _max_abs_residual(model, R))
