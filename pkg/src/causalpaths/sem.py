"""Weighted linear path models on standardized variables.

Attaches path coefficients to a causal graph, derives the error variances
that give every variable unit variance, computes implied correlations two
independent ways (linear-system form and trek tracing), runs standardized
regressions, decomposes effects and correlations path by path, and
performs intervention surgery.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import (
    CorrelationRange,
    InfeasibleStandardization,
    NotPSD,
    NotSymmetric,
    NotUnitDiagonal,
    SingularPredictors,
    UnknownNode,
)
from .graph import DIRECTED, CausalGraph, Edge, topological_order
from .paths import DEFAULT_PATH_CAP, Path, directed_paths, treks

CAUSAL = "causal"
NON_CAUSAL = "non-causal"

SINGULAR_COND = 1e12
PSD_TOL = 1e-8
SYM_TOL = 1e-9
DIAG_TOL = 1e-9


class CorrelationMatrix:
    """Symmetric, unit-diagonal, positive-semidefinite matrix keyed by
    node names."""

    __slots__ = ("names", "values", "_index")

    def __init__(self, names, values):
        names = tuple(names)
        m = np.array(values, dtype=float)
        if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] != len(names):
            raise ValueError("correlation matrix must be square and match the name list")
        if len(set(names)) != len(names):
            raise ValueError("duplicate names in correlation matrix")
        if not np.all(np.isfinite(m)):
            raise CorrelationRange("correlation matrix has non-finite entries")
        if np.max(np.abs(m - m.T)) > SYM_TOL:
            raise NotSymmetric("correlation matrix is not symmetric")
        if np.max(np.abs(np.diag(m) - 1.0)) > DIAG_TOL:
            raise NotUnitDiagonal("correlation matrix diagonal is not 1")
        if np.max(np.abs(m)) > 1.0 + 1e-9:
            raise CorrelationRange("correlation entries must lie in [-1, 1]")
        if len(names) and np.linalg.eigvalsh((m + m.T) / 2.0).min() < -PSD_TOL:
            raise NotPSD("correlation matrix is not positive semidefinite")
        self.names = names
        self.values = (m + m.T) / 2.0
        self.values.flags.writeable = False
        self._index = {n: i for i, n in enumerate(names)}

    def index(self, name: str) -> int:
        try:
            return self._index[name]
        except KeyError:
            raise UnknownNode(f"unknown variable {name!r}") from None

    def r(self, u: str, v: str) -> float:
        return float(self.values[self.index(u), self.index(v)])

    def submatrix(self, names) -> np.ndarray:
        idx = [self.index(n) for n in names]
        return self.values[np.ix_(idx, idx)]

    def vector(self, outcome: str, predictors) -> np.ndarray:
        i = self.index(outcome)
        return self.values[[self.index(p) for p in predictors], i]

    def __eq__(self, other):
        return (
            isinstance(other, CorrelationMatrix)
            and self.names == other.names
            and np.array_equal(self.values, other.values)
        )

    def __repr__(self):
        return f"CorrelationMatrix({list(self.names)!r})"


@dataclass(frozen=True)
class RegressionResult:
    """Standardized least-squares fit of one outcome on its predictors."""

    outcome: str
    coefficients: dict[str, float]
    r_squared: float


@dataclass(frozen=True)
class PathContribution:
    path: Path
    product: float
    kind: str  # causal | non-causal


@dataclass(frozen=True)
class EffectReport:
    """Per-path breakdown of an effect or of a correlation."""

    exposure: str
    outcome: str
    total: float
    direct: float
    indirect: float
    per_path: tuple[PathContribution, ...]
    fixed: frozenset[str] = field(default_factory=frozenset)

    @property
    def causal_part(self) -> float:
        return sum(c.product for c in self.per_path if c.kind == CAUSAL)

    @property
    def noncausal_part(self) -> float:
        return sum(c.product for c in self.per_path if c.kind == NON_CAUSAL)


@dataclass(frozen=True)
class InterventionReport:
    """Predicted standardized shifts after intervening on one node."""

    target: str
    delta: float
    changes: dict[str, float]
    removed_edges: tuple[Edge, ...]


class WeightedModel:
    """Causal graph plus a coefficient per edge and the derived error
    variances that standardize every variable.

    Directed coefficients are path coefficients; bidirected coefficients
    are error covariances.  Use :func:`attach_weights` to construct.
    """

    __slots__ = ("graph", "coef", "error_var", "_beta", "_omega", "_total")

    def __init__(self, graph, coef, error_var, beta, omega, total):
        self.graph = graph
        self.coef = dict(coef)
        self.error_var = dict(error_var)
        self._beta = beta
        self._omega = omega
        self._total = total

    def coefficient(self, edge: Edge) -> float:
        return self.coef[edge]

    def covariance(self) -> np.ndarray:
        """Implied covariance of the variables (unit diagonal)."""
        return self._total @ self._omega @ self._total.T

    def error_covariance(self) -> np.ndarray:
        return self._omega.copy()

    def __repr__(self):
        return f"WeightedModel({self.graph!r})"


def attach_weights(g: CausalGraph, coef) -> WeightedModel:
    """Build a standardized weighted model from per-edge coefficients.

    Error variances are solved in topological order so every variable has
    implied variance exactly 1; raises InfeasibleStandardization when the
    coefficients make that impossible and NotPSD when the resulting error
    covariance is not positive semidefinite.
    """
    coef = dict(coef)
    for edge in g.edges:
        if edge not in coef:
            raise ValueError(f"missing coefficient for edge {edge}")
    for edge in coef:
        if edge not in set(g.edges):
            raise ValueError(f"coefficient given for unknown edge {edge}")

    k = len(g.nodes)
    beta = np.zeros((k, k))
    for edge in g.directed_edges:
        beta[g.index(edge.target), g.index(edge.source)] = coef[edge]

    omega = np.zeros((k, k))
    for edge in g.bidirected_edges:
        i, j = g.index(edge.source), g.index(edge.target)
        omega[i, j] = omega[j, i] = coef[edge]

    # total-effect matrix: total[i, j] = summed products of directed paths
    # j -> i (identity on the diagonal); built exactly by forward
    # propagation so non-ancestor entries stay exactly zero
    total = np.zeros((k, k))
    order = topological_order(g)
    for node in order:
        i = g.index(node)
        total[i, i] = 1.0
        for parent in g.sorted_nodes(g.parents(node)):
            j = g.index(parent)
            total[i, :] += beta[i, j] * total[j, :]

    error_var = {}
    for node in order:
        i = g.index(node)
        implied_var = float(total[i, :] @ omega @ total[i, :])
        resid = 1.0 - implied_var
        if resid < -PSD_TOL:
            raise InfeasibleStandardization(
                f"coefficients leave node {node!r} with error variance {resid:.6g}"
            )
        omega[i, i] = max(resid, 0.0)
        error_var[node] = float(omega[i, i])

    if k and np.linalg.eigvalsh(omega).min() < -PSD_TOL:
        raise NotPSD("error covariance (with bidirected entries) is not positive semidefinite")

    return WeightedModel(g, coef, error_var, beta, omega, total)


def implied_correlations(
    m: WeightedModel,
    method: str = "matrix",
    cap: int = DEFAULT_PATH_CAP,
) -> CorrelationMatrix:
    """Model-implied correlation matrix.

    method="matrix" conjugates the error covariance through the inverse
    linear system; method="tracing" sums coefficient products over treks
    (collider-free simple paths, at most one bidirected edge).  Both agree.
    """
    g = m.graph
    if method == "matrix":
        sigma = m.covariance()
        return CorrelationMatrix(g.nodes, (sigma + sigma.T) / 2.0)
    if method != "tracing":
        raise ValueError(f"method must be 'matrix' or 'tracing', got {method!r}")

    k = len(g.nodes)
    values = np.eye(k)
    for i in range(k):
        for j in range(i + 1, k):
            s = 0.0
            for trek in treks(g, g.nodes[i], g.nodes[j], max_len=max(1, k), cap=cap):
                s += _product(m, trek)
            values[i, j] = values[j, i] = s
    return CorrelationMatrix(g.nodes, values)


def _product(m: WeightedModel, path: Path) -> float:
    p = 1.0
    for edge in path.edges:
        p *= m.coef[edge]
    return p


def regress(R: CorrelationMatrix, outcome: str, predictors) -> RegressionResult:
    """Standardized least squares from a correlation matrix alone.

    Coefficients solve the normal equations on standardized variables;
    r_squared is the explained variance sum(beta_i * r(outcome, x_i)).
    """
    predictors = list(predictors)
    R.index(outcome)
    if len(set(predictors)) != len(predictors):
        raise ValueError("predictors must be distinct")
    if outcome in predictors:
        raise ValueError("outcome cannot be a predictor")
    if not predictors:
        return RegressionResult(outcome, {}, 0.0)
    rxx = R.submatrix(predictors)
    rxy = R.vector(outcome, predictors)
    cond = np.linalg.cond(rxx)
    if not np.isfinite(cond) or cond >= SINGULAR_COND:
        raise SingularPredictors(
            f"predictor correlation matrix is singular or ill-conditioned (cond={cond:.3g})"
        )
    beta = np.linalg.solve(rxx, rxy)
    return RegressionResult(
        outcome,
        {p: float(b) for p, b in zip(predictors, beta)},
        float(beta @ rxy),
    )


def expected_regression(m: WeightedModel, outcome: str, predictors) -> RegressionResult:
    """The regression the model predicts for infinite data: regress on the
    implied correlation matrix."""
    return regress(implied_correlations(m), outcome, predictors)


def total_effect(m: WeightedModel, exposure: str, outcome: str, fixed=frozenset()) -> EffectReport:
    """Total/direct/indirect causal effect along directed paths.

    ``fixed`` nodes are held constant by intervention: paths through them
    are excluded (this is path avoidance, not statistical adjustment).
    """
    g = m.graph
    if exposure == outcome:
        raise ValueError("exposure and outcome must differ")
    fixed = frozenset(fixed)
    for node in fixed:
        g.index(node)
    if exposure in fixed or outcome in fixed:
        raise ValueError("fixed nodes cannot include the endpoints")

    contributions = tuple(
        PathContribution(p, _product(m, p), CAUSAL)
        for p in directed_paths(g, exposure, outcome, avoiding=fixed)
    )
    total = sum(c.product for c in contributions)
    direct = m.coef.get(Edge(exposure, outcome, DIRECTED), 0.0)
    return EffectReport(
        exposure=exposure,
        outcome=outcome,
        total=total,
        direct=direct,
        indirect=total - direct,
        per_path=contributions,
        fixed=fixed,
    )


def correlation_decomposition(
    m: WeightedModel, u: str, v: str, cap: int = DEFAULT_PATH_CAP
) -> EffectReport:
    """Split the implied correlation of two nodes into per-trek products,
    labeling directed u-to-v paths causal and everything else non-causal."""
    g = m.graph
    if u == v:
        raise ValueError("nodes must differ")
    contributions = []
    for trek in treks(g, u, v, max_len=max(1, len(g.nodes)), cap=cap):
        kind = CAUSAL if trek.is_directed_forward() else NON_CAUSAL
        contributions.append(PathContribution(trek, _product(m, trek), kind))
    total = sum(c.product for c in contributions)
    direct = m.coef.get(Edge(u, v, DIRECTED), 0.0)
    return EffectReport(
        exposure=u,
        outcome=v,
        total=total,
        direct=direct,
        indirect=total - direct,
        per_path=tuple(contributions),
    )


def do_surgery(m: WeightedModel, target: str) -> WeightedModel:
    """Model after intervening on ``target``: all directed edges into it and
    all bidirected edges touching it are removed, and error variances are
    re-derived so every variable keeps unit variance."""
    g = m.graph
    g.index(target)
    kept = [
        e
        for e in g.edges
        if not (e.is_directed and e.target == target)
        and not (not e.is_directed and e.touches(target))
    ]
    new_graph = g.replace_edges(kept)
    return attach_weights(new_graph, {e: m.coef[e] for e in kept})


def predict_intervention(m: WeightedModel, target: str, delta: float) -> InterventionReport:
    """Predicted standardized shift of every node after shifting ``target``
    by ``delta`` standard deviations under intervention."""
    g = m.graph
    surgered = do_surgery(m, target)
    removed = tuple(g.sorted_edges(set(g.edges) - set(surgered.graph.edges)))
    changes: dict[str, float] = {}
    for node in g.nodes:
        if node == target:
            changes[node] = float(delta)
        else:
            changes[node] = delta * total_effect(surgered, target, node).total
    return InterventionReport(target=target, delta=float(delta), changes=changes, removed_edges=removed)
