"""Session-oriented HTTP/JSON API serving the engine to local clients.

Sessions are in-memory.  Every mutation validates first and then swaps in
a complete new immutable snapshot with a bumped revision; a rejected edit
leaves the session untouched.  Responses carry the same canonical report
documents the CLI emits, wrapped with the session id and revision:

    {"session": {"id": ..., "revision": N}, "report": {...}}

Errors use HTTP 4xx/5xx with {"error": {"code", "message"}}; a 5xx never
carries partial results.  Endpoints are documented in API.md.
"""

from __future__ import annotations

import json
import re
import threading
import uuid
from dataclasses import dataclass, replace
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path as FsPath

from .enumerate_models import DEFAULT_ORIENTATION_CAP, enumerate_and_fit
from .errors import CausalPathsError
from .fitting import fit, fit_from_data
from .formats import build_document, canonical_json, parse_correlation_csv, parse_dag, write_dag
from .graph import BIDIRECTED, DIRECTED, CausalGraph, Edge
from .paths import DEFAULT_MAX_LEN, DEFAULT_PATH_CAP, adjustment_sets, all_paths, path_status
from .sem import (
    CorrelationMatrix,
    attach_weights,
    correlation_decomposition,
    expected_regression,
    implied_correlations,
    predict_intervention,
    regress,
    total_effect,
)
from .simulate import SelectionRule, select, simulate


class RequestProblem(Exception):
    """Client-side problem with an HTTP status and machine-readable code."""

    def __init__(self, status, code, message):
        self.status = status
        self.code = code
        super().__init__(message)


@dataclass(frozen=True)
class Snapshot:
    """Immutable session state at one revision."""

    graph: CausalGraph
    coef: dict[Edge, float]
    observed: CorrelationMatrix | None
    revision: int

    @property
    def weighted(self) -> bool:
        return len(self.graph.edges) > 0 and all(e in self.coef for e in self.graph.edges)

    def model(self):
        if not self.weighted:
            raise RequestProblem(
                400, "unweighted-model", "every edge needs a coefficient for this query"
            )
        return attach_weights(self.graph, {e: self.coef[e] for e in self.graph.edges})


class Session:
    def __init__(self, snapshot: Snapshot):
        self.id = uuid.uuid4().hex
        self.snapshot = snapshot
        self.edit_lock = threading.Lock()


class Engine:
    """Session registry plus all request handling, HTTP-free for testing."""

    def __init__(self):
        self._sessions: dict[str, Session] = {}
        self._lock = threading.Lock()

    # -- session management -------------------------------------------------
    def create_session(self, payload) -> tuple[Session, dict]:
        dag_text = _field(payload, "dag", str)
        graph, coef = parse_dag(dag_text)
        snapshot = Snapshot(graph=graph, coef=coef or {}, observed=None, revision=0)
        if coef:
            attach_weights(graph, coef)  # reject infeasible uploads outright
        session = Session(snapshot)
        with self._lock:
            self._sessions[session.id] = session
        return session, self._session_doc(snapshot)

    def get_session(self, session_id: str) -> Session:
        with self._lock:
            session = self._sessions.get(session_id)
        if session is None:
            raise RequestProblem(404, "unknown-session", f"no session {session_id!r}")
        return session

    @staticmethod
    def _session_doc(snapshot: Snapshot) -> dict:
        graph = snapshot.graph
        payload = {
            "nodes": list(graph.nodes),
            "edges": [
                {
                    "source": e.source,
                    "target": e.target,
                    "kind": e.kind,
                    **({"coef": float(snapshot.coef[e])} if e in snapshot.coef else {}),
                }
                for e in graph.sorted_edges()
            ],
            "weighted": snapshot.weighted,
            "has_correlation": snapshot.observed is not None,
        }
        return build_document(payload, graph=graph, kind="session")

    # -- edits ---------------------------------------------------------------
    def apply_edit(self, session: Session, payload) -> tuple[dict, int]:
        with session.edit_lock:
            snapshot = session.snapshot
            new_snapshot = self._edited(snapshot, payload)
            session.snapshot = new_snapshot
        return self._session_doc(new_snapshot), new_snapshot.revision

    def _edited(self, snapshot: Snapshot, payload) -> Snapshot:
        op = _field(payload, "op", str)
        graph, coef = snapshot.graph, dict(snapshot.coef)
        nodes, edges = list(graph.nodes), list(graph.edges)

        if op == "add_node":
            nodes.append(_field(payload, "name", str))
        elif op == "remove_node":
            name = _field(payload, "name", str)
            if name not in graph:
                raise RequestProblem(400, "unknown-node", f"no node {name!r}")
            nodes.remove(name)
            edges = [e for e in edges if not e.touches(name)]
            coef = {e: v for e, v in coef.items() if not e.touches(name)}
        elif op == "add_edge":
            edge = _edge_from(payload)
            edges.append(edge)
            if "coef" in payload:
                coef[edge] = float(payload["coef"])
        elif op == "remove_edge":
            edge = _edge_from(payload)
            if edge not in edges:
                raise RequestProblem(400, "unknown-edge", f"no edge {edge}")
            edges.remove(edge)
            coef.pop(edge, None)
        elif op == "reverse_edge":
            edge = _edge_from(payload)
            if edge not in edges or not edge.is_directed:
                raise RequestProblem(400, "unknown-edge", f"no directed edge {edge}")
            flipped = Edge(edge.target, edge.source, DIRECTED)
            edges[edges.index(edge)] = flipped
            if edge in coef:
                coef[flipped] = coef.pop(edge)
        elif op == "set_coef":
            edge = _edge_from(payload)
            if edge not in edges:
                raise RequestProblem(400, "unknown-edge", f"no edge {edge}")
            coef[edge] = _field(payload, "value", (int, float))
        else:
            raise RequestProblem(400, "unknown-op", f"unsupported edit op {op!r}")

        new_graph = CausalGraph(nodes, edges)  # validation happens here
        if all(e in coef for e in new_graph.edges) and new_graph.edges:
            attach_weights(new_graph, {e: coef[e] for e in new_graph.edges})
        return replace(snapshot, graph=new_graph, coef=coef, revision=snapshot.revision + 1)

    def set_correlation(self, session: Session, payload) -> tuple[dict, int]:
        R = parse_correlation_csv(_field(payload, "csv", str))
        with session.edit_lock:
            snapshot = session.snapshot
            for node in snapshot.graph.nodes:
                R.index(node)  # every graph node needs an observed column
            new_snapshot = replace(snapshot, observed=R, revision=snapshot.revision + 1)
            session.snapshot = new_snapshot
            return self._session_doc(new_snapshot), new_snapshot.revision

    def save(self, session: Session, payload) -> dict:
        path = _field(payload, "path", str)
        comments = payload.get("comments", [])
        snapshot = session.snapshot
        coef = snapshot.coef if snapshot.weighted else None
        text = write_dag(snapshot.graph, coef, comments=comments)
        FsPath(path).write_text(text, encoding="utf-8")
        return build_document({"saved": path, "bytes": len(text)}, graph=snapshot.graph, kind="saved")

    # -- queries ---------------------------------------------------------------
    def query(self, snapshot: Snapshot, payload) -> dict:
        kind = _field(payload, "kind", str)
        graph = snapshot.graph
        if kind == "paths":
            source = _field(payload, "from", str)
            target = _field(payload, "to", str)
            adjusted = frozenset(payload.get("adjusted", []))
            max_len = int(payload.get("max_path_len", DEFAULT_MAX_LEN))
            found = all_paths(graph, source, target, max_len=max_len, cap=DEFAULT_PATH_CAP)
            statuses = [path_status(graph, p, adjusted) for p in found]
            query = {
                "command": "paths",
                "from": source,
                "to": target,
                "adjusted": sorted(adjusted),
                "max_path_len": max_len,
            }
            return build_document(statuses, graph=graph, query=query)
        if kind == "adjust":
            exposure = _field(payload, "exposure", str)
            outcome = _field(payload, "outcome", str)
            report = adjustment_sets(graph, exposure, outcome)
            query = {"command": "adjust", "exposure": exposure, "outcome": outcome}
            return build_document(report, graph=graph, query=query)
        if kind == "effect":
            model = snapshot.model()
            exposure = _field(payload, "exposure", str)
            outcome = _field(payload, "outcome", str)
            fixed = frozenset(payload.get("fixed", []))
            report = total_effect(model, exposure, outcome, fixed)
            query = {
                "command": "effect",
                "exposure": exposure,
                "outcome": outcome,
                "fixed": sorted(fixed),
            }
            return build_document(report, model=model, query=query)
        if kind == "decompose":
            model = snapshot.model()
            exposure = _field(payload, "exposure", str)
            outcome = _field(payload, "outcome", str)
            report = correlation_decomposition(model, exposure, outcome)
            query = {"command": "decompose", "exposure": exposure, "outcome": outcome}
            return build_document(report, model=model, query=query, kind="decomposition")
        if kind == "implied":
            model = snapshot.model()
            method = payload.get("method", "matrix")
            R = implied_correlations(model, method=method)
            return build_document(R, model=model, query={"command": "implied", "method": method})
        if kind == "regress":
            outcome = _field(payload, "outcome", str)
            predictors = list(payload.get("predictors", []))
            on = payload.get("on", "model")
            query = {"command": "regress", "outcome": outcome, "predictors": predictors}
            if on == "observed":
                if snapshot.observed is None:
                    raise RequestProblem(400, "no-correlation", "no observed correlation matrix loaded")
                result = regress(snapshot.observed, outcome, predictors)
                return build_document(result, query=query)
            model = snapshot.model()
            result = expected_regression(model, outcome, predictors)
            return build_document(result, model=model, query=query)
        raise RequestProblem(400, "unknown-query", f"unsupported query kind {kind!r}")

    def intervene(self, snapshot: Snapshot, payload) -> dict:
        model = snapshot.model()
        target = _field(payload, "target", str)
        delta = _field(payload, "delta", (int, float))
        report = predict_intervention(model, target, float(delta))
        query = {"command": "intervene", "target": target, "delta": float(delta)}
        return build_document(report, model=model, query=query)

    def simulate_fit(self, snapshot: Snapshot, payload) -> dict:
        model = snapshot.model()
        n = int(payload.get("n", 10**5))
        seed = int(payload.get("seed", 0))
        dataset = simulate(model, n, seed=seed)
        rule_doc = payload.get("select")
        if rule_doc:
            rule = SelectionRule(
                _field(rule_doc, "node", str),
                _field(rule_doc, "op", str),
                float(_field(rule_doc, "threshold", (int, float))),
            )
            dataset = select(dataset, rule)
        result = fit_from_data(snapshot.graph, dataset)
        query = {"command": "simulate-fit", "n": n, "seed": seed}
        return build_document(result, query=query)

    def enumerate(self, snapshot: Snapshot, payload) -> dict:
        if snapshot.observed is None:
            raise RequestProblem(400, "no-correlation", "no observed correlation matrix loaded")
        graph = snapshot.graph
        pairs = [(e.source, e.target) for e in graph.sorted_edges()]
        queries = [
            (_field(q, "exposure", str), _field(q, "outcome", str), tuple(q.get("fixed", [])))
            for q in payload.get("queries", [])
        ]
        cap = int(payload.get("cap", DEFAULT_ORIENTATION_CAP))
        result = enumerate_and_fit(pairs, snapshot.observed, queries, cap=cap, nodes=list(graph.nodes))
        query = {"command": "enumerate", "queries": len(queries)}
        return build_document(result, query=query)


def _field(payload, name, types):
    if not isinstance(payload, dict) or name not in payload:
        raise RequestProblem(400, "bad-request", f"missing field {name!r}")
    value = payload[name]
    if not isinstance(value, types):
        raise RequestProblem(400, "bad-request", f"field {name!r} has the wrong type")
    return value


def _edge_from(payload) -> Edge:
    kind = payload.get("kind", DIRECTED)
    if kind not in (DIRECTED, BIDIRECTED):
        raise RequestProblem(400, "bad-request", f"unknown edge kind {kind!r}")
    return Edge(_field(payload, "source", str), _field(payload, "target", str), kind)


_ROUTES = [
    ("POST", re.compile(r"/sessions$"), "create"),
    ("GET", re.compile(r"/sessions/(?P<sid>[0-9a-f]+)$"), "snapshot"),
    ("POST", re.compile(r"/sessions/(?P<sid>[0-9a-f]+)/edits$"), "edit"),
    ("POST", re.compile(r"/sessions/(?P<sid>[0-9a-f]+)/query$"), "query"),
    ("POST", re.compile(r"/sessions/(?P<sid>[0-9a-f]+)/intervene$"), "intervene"),
    ("POST", re.compile(r"/sessions/(?P<sid>[0-9a-f]+)/simulate-fit$"), "simulate_fit"),
    ("POST", re.compile(r"/sessions/(?P<sid>[0-9a-f]+)/enumerate$"), "enumerate"),
    ("POST", re.compile(r"/sessions/(?P<sid>[0-9a-f]+)/correlation$"), "correlation"),
    ("POST", re.compile(r"/sessions/(?P<sid>[0-9a-f]+)/save$"), "save"),
    ("GET", re.compile(r"/$"), "index"),
]

_INDEX = {
    "service": "causalpaths",
    "endpoints": [
        "POST /sessions {dag}",
        "GET /sessions/{id}",
        "POST /sessions/{id}/edits {op, ...}",
        "POST /sessions/{id}/query {kind, ...}",
        "POST /sessions/{id}/intervene {target, delta}",
        "POST /sessions/{id}/simulate-fit {n, seed, select?}",
        "POST /sessions/{id}/enumerate {queries}",
        "POST /sessions/{id}/correlation {csv}",
        "POST /sessions/{id}/save {path}",
    ],
}


class Handler(BaseHTTPRequestHandler):
    engine: Engine  # set by create_server
    protocol_version = "HTTP/1.1"

    def log_message(self, fmt, *args):  # quiet by default
        pass

    def do_GET(self):
        self._dispatch("GET")

    def do_POST(self):
        self._dispatch("POST")

    def do_OPTIONS(self):
        # CORS preflight for browser clients
        self.send_response(204)
        self.send_header("Access-Control-Allow-Origin", "*")
        self.send_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS")
        self.send_header("Access-Control-Allow-Headers", "Content-Type")
        self.send_header("Content-Length", "0")
        self.end_headers()

    def _dispatch(self, method):
        try:
            for verb, pattern, action in _ROUTES:
                match = pattern.fullmatch(self.path)
                if match:
                    if verb != method:
                        raise RequestProblem(405, "method-not-allowed", f"{method} not allowed here")
                    self._handle(action, match.groupdict())
                    return
            raise RequestProblem(404, "unknown-endpoint", f"no endpoint {self.path!r}")
        except RequestProblem as exc:
            self._send(exc.status, {"error": {"code": exc.code, "message": str(exc)}})
        except (CausalPathsError, ValueError) as exc:
            code = getattr(exc, "code", "bad-request")
            self._send(400, {"error": {"code": code, "message": str(exc)}})
        except Exception as exc:  # internal: no partial results
            self._send(500, {"error": {"code": "internal", "message": f"{type(exc).__name__}: {exc}"}})

    def _payload(self):
        length = int(self.headers.get("Content-Length") or 0)
        if length == 0:
            return {}
        raw = self.rfile.read(length)
        try:
            return json.loads(raw.decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError) as exc:
            raise RequestProblem(400, "bad-json", f"request body is not valid JSON: {exc}") from None

    def _handle(self, action, params):
        engine = self.engine
        if action == "index":
            self._send(200, _INDEX)
            return
        if action == "create":
            session, report = engine.create_session(self._payload())
            self._send(200, self._envelope(session.id, session.snapshot.revision, report))
            return
        session = engine.get_session(params["sid"])
        if action == "snapshot":
            snapshot = session.snapshot
            self._send(200, self._envelope(session.id, snapshot.revision, engine._session_doc(snapshot)))
            return
        payload = self._payload()
        if action == "edit":
            report, revision = engine.apply_edit(session, payload)
        elif action == "correlation":
            report, revision = engine.set_correlation(session, payload)
        elif action == "save":
            snapshot = session.snapshot
            report = engine.save(session, payload)
            revision = snapshot.revision
        else:
            # queries read one consistent snapshot; the reported revision is
            # the snapshot's even if edits land concurrently
            snapshot = session.snapshot
            handler = {
                "query": engine.query,
                "intervene": engine.intervene,
                "simulate_fit": engine.simulate_fit,
                "enumerate": engine.enumerate,
            }[action]
            report = handler(snapshot, payload)
            revision = snapshot.revision
        self._send(200, self._envelope(session.id, revision, report))

    @staticmethod
    def _envelope(session_id, revision, report):
        return {"session": {"id": session_id, "revision": revision}, "report": report}

    def _send(self, status, doc):
        body = canonical_json(doc).encode("utf-8")
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(body)))
        self.send_header("Access-Control-Allow-Origin", "*")
        self.end_headers()
        self.wfile.write(body)


def create_server(host: str = "127.0.0.1", port: int = 8350) -> ThreadingHTTPServer:
    engine = Engine()
    handler = type("BoundHandler", (Handler,), {"engine": engine})
    return ThreadingHTTPServer((host, port), handler)


def run_server(host: str, port: int) -> None:
    server = create_server(host, port)
    print(f"causalpaths API listening on http://{host}:{port}/", flush=True)
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.server_close()
