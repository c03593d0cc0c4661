"""Byte-level formats: the DAG text grammar, correlation-matrix CSV,
dataset CSV, and the canonical report document.

The DAG grammar, one statement per line:

    # comment (also allowed at end of line)
    node NAME
    SRC -> DST [coef=NUMBER]
    A <-> B [coef=NUMBER]

Reports are canonical JSON: sorted keys, two-space indent, shortest
round-trip float formatting, trailing newline.  Identical inputs yield
byte-identical documents.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json

import numpy as np

from . import __version__
from .enumerate_models import EnumerationResult
from .errors import (
    CorrelationRange,
    DagSyntaxError,
    NonNumeric,
    PartialWeights,
    RaggedRows,
    SelfLoop,
)
from .fitting import FitResult
from .graph import BIDIRECTED, DIRECTED, CausalGraph, Edge, build_graph, check_node_name
from .paths import AdjustmentReport, PathStatus
from .sem import (
    CorrelationMatrix,
    EffectReport,
    InterventionReport,
    RegressionResult,
    WeightedModel,
)
from .simulate import Dataset

TOOL_NAME = "causalpaths"


# --------------------------------------------------------------------------
# DAG grammar
# --------------------------------------------------------------------------

_ARROWS = {"->": DIRECTED, "<->": BIDIRECTED}


def parse_dag(text: str):
    """Parse DAG text into (CausalGraph, coefficient map or None).

    The coefficient map is returned only when every edge carries coef=;
    a mix raises PartialWeights.  Syntax problems raise DagSyntaxError
    with line and column; a directed cycle raises CycleError.
    """
    declared: list[str] = []
    seen_nodes: set[str] = set()
    edges: list[Edge] = []
    edge_lines: dict[Edge, int] = {}
    coef: dict[Edge, float] = {}

    def declare(name, lineno, col):
        try:
            check_node_name(name)
        except Exception:
            raise DagSyntaxError(f"invalid node name {name!r}", lineno, col) from None
        if name not in seen_nodes:
            seen_nodes.add(name)
            declared.append(name)

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0]
        tokens = line.split()
        if not tokens:
            continue
        if tokens[0] == "node":
            if len(tokens) != 2:
                raise DagSyntaxError("expected: node NAME", lineno, 1)
            declare(tokens[1], lineno, raw.find(tokens[1]) + 1)
            continue
        if len(tokens) < 3 or tokens[1] not in _ARROWS:
            raise DagSyntaxError(
                "expected: SRC -> DST or A <-> B (optionally with coef=NUMBER)", lineno, 1
            )
        src, arrow, dst = tokens[0], tokens[1], tokens[2]
        declare(src, lineno, raw.find(src) + 1)
        declare(dst, lineno, raw.find(dst, raw.find(arrow)) + 1)
        try:
            edge = Edge(src, dst, _ARROWS[arrow])
        except SelfLoop:
            raise DagSyntaxError(f"self-loop on node {src!r}", lineno, 1) from None
        if edge in edge_lines:
            raise DagSyntaxError(
                f"duplicate edge {edge} (first seen on line {edge_lines[edge]})", lineno, 1
            )
        edge_lines[edge] = lineno
        edges.append(edge)
        for attr in tokens[3:]:
            key, eq, value = attr.partition("=")
            if eq != "=" or not value:
                raise DagSyntaxError(f"malformed attribute {attr!r}", lineno, raw.find(attr) + 1)
            if key != "coef":
                raise DagSyntaxError(f"unknown attribute key {key!r}", lineno, raw.find(attr) + 1)
            try:
                coef[edge] = float(value)
            except ValueError:
                raise DagSyntaxError(
                    f"coef value {value!r} is not a number", lineno, raw.find(value) + 1
                ) from None

    graph = build_graph(declared, edges)
    if not coef:
        return graph, None
    if len(coef) != len(edges):
        missing = next(e for e in edges if e not in coef)
        raise PartialWeights(
            f"{len(coef)} of {len(edges)} edges carry coef=; first bare edge is {missing}",
            edge_lines[missing],
        )
    return graph, coef


def write_dag(g: CausalGraph, coef=None, comments=()) -> str:
    """Serialize a graph (optionally weighted) in the DAG grammar."""
    lines = [f"# {c}" if c else "#" for c in comments]
    for node in g.nodes:
        lines.append(f"node {node}")
    for edge in g.sorted_edges():
        glyph = "->" if edge.is_directed else "<->"
        line = f"{edge.source} {glyph} {edge.target}"
        if coef is not None:
            line += f" coef={float(coef[edge])!r}"
        lines.append(line)
    return "\n".join(lines) + "\n"


def graph_digest(g: CausalGraph, coef=None) -> str:
    """Stable identity of a graph (plus coefficients when given)."""
    return hashlib.sha256(write_dag(g, coef).encode()).hexdigest()


# --------------------------------------------------------------------------
# correlation-matrix CSV
# --------------------------------------------------------------------------


def parse_correlation_csv(text: str) -> CorrelationMatrix:
    rows = [row for row in csv.reader(io.StringIO(text)) if any(cell.strip() for cell in row)]
    if not rows:
        raise RaggedRows("empty correlation document", 1)
    header = [cell.strip() for cell in rows[0]]
    if header and header[0].lower() in ("", "name"):
        header = header[1:]
    names = header
    body = rows[1:]
    if len(body) != len(names):
        raise RaggedRows(
            f"expected {len(names)} data rows for {len(names)} names, got {len(body)}", 2
        )
    values = np.empty((len(names), len(names)))
    for i, row in enumerate(body, start=2):
        cells = [cell.strip() for cell in row]
        if len(cells) != len(names) + 1:
            raise RaggedRows(f"expected {len(names) + 1} cells, got {len(cells)}", i)
        if cells[0] != names[i - 2]:
            raise RaggedRows(
                f"row name {cells[0]!r} does not match header order ({names[i - 2]!r})", i
            )
        for j, cell in enumerate(cells[1:], start=1):
            try:
                value = float(cell)
            except ValueError:
                raise NonNumeric(f"cell {cell!r} is not a number", i, j + 1) from None
            if abs(value) > 1.0 + 1e-9:
                raise CorrelationRange(f"correlation {value!r} outside [-1, 1]", i, j + 1)
            values[i - 2, j - 1] = value
    return CorrelationMatrix(names, values)


def write_correlation_csv(R: CorrelationMatrix) -> str:
    lines = ["," + ",".join(R.names)]
    for i, name in enumerate(R.names):
        lines.append(name + "," + ",".join(repr(float(v)) for v in R.values[i]))
    return "\n".join(lines) + "\n"


# --------------------------------------------------------------------------
# dataset CSV
# --------------------------------------------------------------------------


def read_dataset_csv(text: str, seed: int = 0, provenance: str = "loaded from CSV") -> Dataset:
    rows = list(csv.reader(io.StringIO(text)))
    rows = [row for row in rows if any(cell.strip() for cell in row)]
    if not rows:
        raise RaggedRows("empty dataset document", 1)
    names = [cell.strip() for cell in rows[0]]
    for name in names:
        check_node_name(name)
    data = [[] for _ in names]
    for i, row in enumerate(rows[1:], start=2):
        if len(row) != len(names):
            raise RaggedRows(f"expected {len(names)} cells, got {len(row)}", i)
        for j, cell in enumerate(row):
            try:
                data[j].append(float(cell))
            except ValueError:
                raise NonNumeric(f"cell {cell.strip()!r} is not a number", i, j + 1) from None
    columns = {name: np.array(col, dtype=float) for name, col in zip(names, data)}
    return Dataset(columns=columns, n=len(rows) - 1, seed=seed, provenance=provenance)


def write_dataset_csv(d: Dataset) -> str:
    names = list(d.columns)
    out = io.StringIO()
    out.write(",".join(names) + "\n")
    for i in range(d.n):
        out.write(",".join(repr(float(d.columns[name][i])) for name in names) + "\n")
    return out.getvalue()


# --------------------------------------------------------------------------
# report documents
# --------------------------------------------------------------------------


def canonical_json(doc) -> str:
    return json.dumps(doc, sort_keys=True, indent=2, allow_nan=False) + "\n"


def _edge_doc(edge: Edge, coef=None):
    doc = {"source": edge.source, "target": edge.target, "kind": edge.kind}
    if coef is not None:
        doc["coef"] = float(coef[edge])
    return doc


def _graph_inputs(g: CausalGraph, coef=None):
    return {
        "digest": graph_digest(g, coef),
        "nodes": list(g.nodes),
        "edges": [_edge_doc(e, coef) for e in g.sorted_edges()],
    }


def _path_doc(path):
    return {"path": path.describe(), "nodes": list(path.nodes)}


def _status_doc(status: PathStatus):
    doc = _path_doc(status.path)
    doc["roles"] = [{"node": r.node, "role": r.role} for r in status.roles]
    doc["open"] = status.open
    doc["blockers"] = [{"node": b.node, "reason": b.reason} for b in status.blockers]
    return doc


def _sets_doc(g, sets):
    return [g.sorted_nodes(s) for s in sets]


def build_document(report, graph=None, model=None, query=None, kind=None) -> dict:
    """Assemble the canonical document dict for any report object."""
    g = graph if graph is not None else (model.graph if model is not None else None)
    coef = model.coef if model is not None else None
    doc = {
        "provenance": {"tool": TOOL_NAME, "version": __version__},
    }
    if query:
        doc["query"] = dict(query)
    if g is not None:
        doc["inputs"] = {"graph": _graph_inputs(g, coef)}

    if isinstance(report, EffectReport):
        doc["kind"] = kind or "effect"
        doc["results"] = {
            "exposure": report.exposure,
            "outcome": report.outcome,
            "total": float(report.total),
            "direct": float(report.direct),
            "indirect": float(report.indirect),
            "causal_part": float(report.causal_part),
            "noncausal_part": float(report.noncausal_part),
            "fixed": sorted(report.fixed),
            "paths": [
                dict(_path_doc(c.path), product=float(c.product), kind=c.kind)
                for c in report.per_path
            ],
        }
    elif isinstance(report, AdjustmentReport):
        doc["kind"] = kind or "adjustment"
        doc["results"] = {
            "exposure": report.exposure,
            "outcome": report.outcome,
            "valid_sets": _sets_doc(g, report.valid_sets) if g else [sorted(s) for s in report.valid_sets],
            "minimal_sets": _sets_doc(g, report.minimal_sets) if g else [sorted(s) for s in report.minimal_sets],
            "variable_roles": {n: list(r) for n, r in report.variable_roles.items()},
        }
    elif isinstance(report, RegressionResult):
        doc["kind"] = kind or "regression"
        doc["results"] = {
            "outcome": report.outcome,
            "predictors": list(report.coefficients),
            "coefficients": {n: float(v) for n, v in report.coefficients.items()},
            "r_squared": float(report.r_squared),
        }
    elif isinstance(report, CorrelationMatrix):
        doc["kind"] = kind or "implied_correlations"
        doc["results"] = {
            "names": list(report.names),
            "matrix": [[float(v) for v in row] for row in report.values],
        }
    elif isinstance(report, FitResult):
        doc["kind"] = kind or "fit"
        doc["results"] = _fit_doc(report)
        doc["inputs"] = {"graph": _graph_inputs(report.model.graph, report.model.coef)}
    elif isinstance(report, InterventionReport):
        doc["kind"] = kind or "intervention"
        doc["results"] = {
            "target": report.target,
            "delta": float(report.delta),
            "changes": {n: float(v) for n, v in report.changes.items()},
            "removed_edges": [_edge_doc(e) for e in report.removed_edges],
        }
    elif isinstance(report, EnumerationResult):
        doc["kind"] = kind or "enumeration"
        doc["results"] = {
            "nodes": list(report.nodes),
            "skeleton": [list(pair) for pair in report.skeleton],
            "models": [
                {
                    "label": entry.label,
                    "edges": [
                        _edge_doc(e, entry.fit.model.coef)
                        for e in entry.graph.sorted_edges()
                    ],
                    "max_abs_residual": float(entry.fit.max_abs_residual),
                    "effects": [
                        {
                            "exposure": exposure,
                            "outcome": outcome,
                            "fixed": sorted(fixed),
                            "total": float(total),
                        }
                        for (exposure, outcome, fixed), total in entry.effects.items()
                    ],
                }
                for entry in report.models
            ],
        }
    elif isinstance(report, Dataset):
        doc["kind"] = kind or "dataset_summary"
        doc["results"] = {
            "n": report.n,
            "seed": report.seed,
            "provenance": report.provenance,
            "columns": list(report.columns),
        }
    elif isinstance(report, list) and all(isinstance(s, PathStatus) for s in report):
        doc["kind"] = kind or "paths"
        doc["results"] = {"paths": [_status_doc(s) for s in report], "count": len(report)}
    elif isinstance(report, dict):
        doc["kind"] = kind or "document"
        doc["results"] = report
    else:
        raise TypeError(f"cannot build a report document from {type(report).__name__}")
    return doc


def _fit_doc(result: FitResult):
    model = result.model
    return {
        "coefficients": [
            _edge_doc(e, model.coef) for e in model.graph.sorted_edges()
        ],
        "error_var": {n: float(v) for n, v in model.error_var.items()},
        "per_equation": {
            n: {
                "coefficients": {p: float(v) for p, v in r.coefficients.items()},
                "r_squared": float(r.r_squared),
            }
            for n, r in result.per_equation.items()
        },
        "max_abs_residual": float(result.max_abs_residual),
    }


def write_report(report, graph=None, model=None, query=None, kind=None) -> str:
    """Canonical, byte-stable report document for any engine result."""
    return canonical_json(build_document(report, graph=graph, model=model, query=query, kind=kind))
