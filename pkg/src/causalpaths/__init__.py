"""Causal inference on linear path models over standardized variables.

Classify paths, find adjustment sets, derive implied correlations and
causal effects, fit and enumerate models, simulate data, and predict
intervention outcomes.
"""

__version__ = "0.1.0"

from .errors import (
    CausalPathsError,
    CorrelationRange,
    CycleError,
    DagSyntaxError,
    DegenerateColumn,
    DuplicateEdge,
    DuplicateNode,
    FormatError,
    GraphError,
    GraphTooLarge,
    InfeasibleStandardization,
    InvalidName,
    NonNumeric,
    NoValidSet,
    NotPSD,
    NotSymmetric,
    NotUnitDiagonal,
    PartialWeights,
    PathExplosion,
    RaggedRows,
    SelfLoop,
    SingularPredictors,
    TooManyOrientations,
    UnknownNode,
    UnsupportedBidirected,
)
from .graph import (
    BIDIRECTED,
    DIRECTED,
    CausalGraph,
    Edge,
    bidirected,
    build_graph,
    directed,
    relatives,
    topological_order,
)
from .paths import (
    AdjustmentReport,
    NodeRole,
    Path,
    PathStatus,
    adjustment_sets,
    all_paths,
    backdoor_paths,
    directed_paths,
    is_d_separated,
    path_status,
    treks,
)
from .sem import (
    CorrelationMatrix,
    EffectReport,
    InterventionReport,
    RegressionResult,
    WeightedModel,
    attach_weights,
    correlation_decomposition,
    do_surgery,
    expected_regression,
    implied_correlations,
    predict_intervention,
    regress,
    total_effect,
)
from .fitting import FitResult, fit, fit_from_data
from .simulate import Dataset, SelectionRule, select, simulate
from .enumerate_models import (
    EnumerationResult,
    ModelEntry,
    enumerate_and_fit,
    enumerate_orientations,
)
from .formats import (
    graph_digest,
    parse_correlation_csv,
    parse_dag,
    read_dataset_csv,
    write_correlation_csv,
    write_dag,
    write_dataset_csv,
    write_report,
)

__all__ = [name for name in dir() if not name.startswith("_")]
