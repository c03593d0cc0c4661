"""Exception hierarchy for the causalpaths engine.

Every error raised on a user-facing code path derives from
:class:`CausalPathsError`, so callers (CLI, server) can separate input
problems from genuine bugs.
"""

from __future__ import annotations


class CausalPathsError(Exception):
    """Base class for all engine errors."""

    #: machine-readable reason code, used on the wire and in diagnostics
    code = "error"


class GraphError(CausalPathsError):
    code = "graph-error"


class InvalidName(GraphError):
    code = "invalid-name"


class DuplicateNode(GraphError):
    code = "duplicate-node"


class UnknownNode(GraphError):
    code = "unknown-node"


class SelfLoop(GraphError):
    code = "self-loop"


class DuplicateEdge(GraphError):
    code = "duplicate-edge"


class CycleError(GraphError):
    """Directed part of the graph contains a cycle.

    ``cycle`` holds one offending node sequence (first node repeated last).
    """

    code = "cycle"

    def __init__(self, cycle):
        self.cycle = list(cycle)
        super().__init__("directed cycle: " + " -> ".join(self.cycle))


class PathExplosion(CausalPathsError):
    code = "path-explosion"

    def __init__(self, cap):
        self.cap = cap
        super().__init__(f"path enumeration exceeded the cap of {cap} paths")


class GraphTooLarge(CausalPathsError):
    code = "graph-too-large"


class NoValidSet(CausalPathsError):
    code = "no-valid-adjustment-set"


class InfeasibleStandardization(CausalPathsError):
    code = "infeasible-standardization"


class NotPSD(CausalPathsError):
    code = "not-positive-semidefinite"


class SingularPredictors(CausalPathsError):
    code = "singular-predictors"


class UnsupportedBidirected(CausalPathsError):
    code = "unsupported-bidirected"


class DegenerateColumn(CausalPathsError):
    code = "degenerate-column"


class TooManyOrientations(CausalPathsError):
    code = "too-many-orientations"


class FormatError(CausalPathsError):
    """Problem in a serialized document; carries a source location."""

    code = "format-error"

    def __init__(self, message, line=None, column=None):
        self.line = line
        self.column = column
        where = ""
        if line is not None:
            where = f" (line {line}" + (f", column {column})" if column is not None else ")")
        super().__init__(message + where)


class DagSyntaxError(FormatError):
    code = "dag-syntax"


class PartialWeights(FormatError):
    code = "partial-weights"


class RaggedRows(FormatError):
    code = "ragged-rows"


class NonNumeric(FormatError):
    code = "non-numeric"


class NotSymmetric(FormatError):
    code = "not-symmetric"


class NotUnitDiagonal(FormatError):
    code = "not-unit-diagonal"


class CorrelationRange(FormatError):
    code = "correlation-out-of-range"
