"""Command-line surface: every engine capability as a subcommand.

Success prints a report document (JSON by default, aligned text with
--table) on stdout and exits 0; user errors print a diagnostic on stderr
and exit 2; unexpected failures exit 1.  The environment variable
BACKDOOR_PATH_CAP overrides the path-enumeration cap.
"""

from __future__ import annotations

import argparse
import os
import re
import sys
from pathlib import Path as FsPath

from . import __version__
from .enumerate_models import DEFAULT_ORIENTATION_CAP, enumerate_and_fit
from .errors import CausalPathsError
from .fitting import fit, fit_from_data
from .formats import (
    build_document,
    canonical_json,
    parse_correlation_csv,
    parse_dag,
    read_dataset_csv,
    write_correlation_csv,
    write_dataset_csv,
    write_report,
)
from .paths import DEFAULT_MAX_LEN, DEFAULT_PATH_CAP, adjustment_sets, all_paths, path_status
from .sem import (
    attach_weights,
    correlation_decomposition,
    expected_regression,
    implied_correlations,
    predict_intervention,
    regress,
    total_effect,
)
from .simulate import SelectionRule, select, simulate


def _path_cap() -> int:
    raw = os.environ.get("BACKDOOR_PATH_CAP")
    if raw is None:
        return DEFAULT_PATH_CAP
    try:
        cap = int(raw)
    except ValueError:
        raise ValueError(f"BACKDOOR_PATH_CAP must be an integer, got {raw!r}") from None
    if cap < 1:
        raise ValueError("BACKDOOR_PATH_CAP must be positive")
    return cap


def _read(path: str) -> str:
    return FsPath(path).read_text(encoding="utf-8")


def _load_graph(path: str):
    return parse_dag(_read(path))


def _load_model(path: str):
    graph, coef = _load_graph(path)
    if coef is None:
        raise ValueError(
            f"{path} has no coefficients; this command needs a weighted model "
            "(add coef= to every edge)"
        )
    return attach_weights(graph, coef)


def _names(arg: str | None) -> list[str]:
    if not arg:
        return []
    return [part for part in (p.strip() for p in arg.split(",")) if part]


_SELECT_RE = re.compile(r"(?P<node>[A-Za-z_]\w*)\s*(?P<op>[<>])\s*(?P<threshold>.+)")


def _parse_select(arg: str) -> SelectionRule:
    m = _SELECT_RE.fullmatch(arg.strip())
    if not m:
        raise ValueError(f"--select must look like NODE>THRESH or NODE<THRESH, got {arg!r}")
    return SelectionRule(m.group("node"), m.group("op"), float(m.group("threshold")))


def _parse_query(arg: str):
    parts = arg.split(":")
    if len(parts) == 2:
        exposure, outcome = parts
        fixed: tuple[str, ...] = ()
    elif len(parts) == 3:
        exposure, outcome = parts[0], parts[1]
        fixed = tuple(_names(parts[2].replace("+", ",")))
    else:
        raise ValueError(f"--query must look like EXPOSURE:OUTCOME[:FIX1+FIX2], got {arg!r}")
    return exposure.strip(), outcome.strip(), fixed


def _parse_skeleton(arg: str):
    arg = arg.strip()
    if arg.startswith("complete:"):
        names = _names(arg[len("complete:") :])
        if len(names) < 2:
            raise ValueError("complete skeleton needs at least two nodes")
        pairs = [(names[i], names[j]) for i in range(len(names)) for j in range(i + 1, len(names))]
        return names, pairs
    pairs = []
    names: list[str] = []
    for token in _names(arg):
        a, sep, b = token.partition("-")
        if not sep or not a or not b:
            raise ValueError(f"skeleton pair {token!r} must look like A-B")
        pairs.append((a, b))
        for name in (a, b):
            if name not in names:
                names.append(name)
    if not pairs:
        raise ValueError("empty skeleton")
    return names, pairs


def _emit(args, report, **context) -> None:
    doc = build_document(report, **context)
    if args.table:
        sys.stdout.write(render_table(doc))
    else:
        sys.stdout.write(canonical_json(doc))


def render_table(doc: dict) -> str:
    """Aligned human-readable rendering of a report document."""
    lines = [f"kind: {doc['kind']}"]
    results = doc.get("results", {})
    scalars = {
        k: v for k, v in results.items() if not isinstance(v, (list, dict)) or k == "fixed"
    }
    for key in sorted(scalars):
        lines.append(f"{key}: {_cell(scalars[key])}")
    for key in sorted(results):
        value = results[key]
        if key in scalars or value in ([], {}):
            continue
        if key == "paths" and isinstance(value, list):
            lines.append("paths:")
            rows = []
            for p in value:
                status = ("open" if p["open"] else "blocked") if "open" in p else p.get("kind", "")
                rows.append(
                    [
                        p.get("path", ""),
                        _cell(p.get("product", "")),
                        status,
                        "; ".join(f"{b['node']}: {b['reason']}" for b in p.get("blockers", [])),
                    ]
                )
            lines.extend(_aligned(rows, indent="  "))
        elif key == "matrix":
            names = results.get("names", [])
            rows = [[""] + list(names)] + [
                [names[i]] + [_cell(v) for v in row] for i, row in enumerate(value)
            ]
            lines.append("matrix:")
            lines.extend(_aligned(rows, indent="  "))
        elif key == "models":
            lines.append("models:")
            for entry in value:
                effects = ", ".join(
                    f"{e['exposure']}->{e['outcome']}"
                    + (f" fixing {'+'.join(e['fixed'])}" if e["fixed"] else "")
                    + f": {_cell(e['total'])}"
                    for e in entry.get("effects", [])
                )
                lines.append(f"  {entry['label']}: {effects}")
        elif isinstance(value, dict):
            lines.append(f"{key}:")
            for sub in sorted(value):
                lines.append(f"  {sub}: {_cell(value[sub])}")
        elif isinstance(value, list):
            lines.append(f"{key}:")
            for item in value:
                lines.append(f"  {_cell(item)}")
    return "\n".join(lines) + "\n"


def _cell(value) -> str:
    if isinstance(value, float):
        return f"{value:.6g}"
    if isinstance(value, dict):
        if {"source", "target", "kind"} <= set(value):
            glyph = "->" if value["kind"] == "directed" else "<->"
            text = f"{value['source']} {glyph} {value['target']}"
            if "coef" in value:
                text += f" coef={value['coef']:.6g}"
            return text
        return ", ".join(f"{k}={_cell(v)}" for k, v in sorted(value.items()))
    if isinstance(value, list):
        return "{" + ", ".join(_cell(v) for v in value) + "}"
    return str(value)


def _aligned(rows, indent="") -> list[str]:
    if not rows:
        return []
    widths = [max(len(str(row[i])) for row in rows) for i in range(len(rows[0]))]
    return [
        indent + "  ".join(str(cell).ljust(width) for cell, width in zip(row, widths)).rstrip()
        for row in rows
    ]


# --------------------------------------------------------------------------
# subcommands
# --------------------------------------------------------------------------


def _cmd_paths(args):
    graph, _ = _load_graph(args.graph)
    adjusted = frozenset(_names(args.adjust))
    found = all_paths(graph, args.source, args.target, max_len=args.max_path_len, cap=_path_cap())
    statuses = [path_status(graph, p, adjusted) for p in found]
    query = {
        "command": "paths",
        "from": args.source,
        "to": args.target,
        "adjusted": sorted(adjusted),
        "max_path_len": args.max_path_len,
    }
    _emit(args, statuses, graph=graph, query=query)


def _cmd_adjust(args):
    graph, _ = _load_graph(args.graph)
    report = adjustment_sets(graph, args.exposure, args.outcome, cap=_path_cap())
    query = {"command": "adjust", "exposure": args.exposure, "outcome": args.outcome}
    _emit(args, report, graph=graph, query=query)


def _cmd_effect(args):
    model = _load_model(args.graph)
    fixed = frozenset(_names(args.fixed))
    report = total_effect(model, args.exposure, args.outcome, fixed)
    query = {
        "command": "effect",
        "exposure": args.exposure,
        "outcome": args.outcome,
        "fixed": sorted(fixed),
    }
    _emit(args, report, model=model, query=query)


def _cmd_decompose(args):
    model = _load_model(args.graph)
    report = correlation_decomposition(model, args.exposure, args.outcome, cap=_path_cap())
    query = {"command": "decompose", "exposure": args.exposure, "outcome": args.outcome}
    _emit(args, report, model=model, query=query, kind="decomposition")


def _cmd_regress(args):
    predictors = _names(args.predictors)
    if args.cor:
        R = parse_correlation_csv(_read(args.cor))
        result = regress(R, args.outcome, predictors)
        context = {}
    else:
        model = _load_model(args.graph)
        result = expected_regression(model, args.outcome, predictors)
        context = {"model": model}
    query = {"command": "regress", "outcome": args.outcome, "predictors": predictors}
    _emit(args, result, query=query, **context)


def _cmd_implied(args):
    model = _load_model(args.graph)
    R = implied_correlations(model, method=args.method, cap=_path_cap())
    if args.csv:
        sys.stdout.write(write_correlation_csv(R))
        return
    query = {"command": "implied", "method": args.method}
    _emit(args, R, model=model, query=query)


def _cmd_fit(args):
    graph, _ = _load_graph(args.graph)
    if bool(args.cor) == bool(args.data):
        raise ValueError("fit needs exactly one of --cor or --data")
    if args.cor:
        result = fit(graph, parse_correlation_csv(_read(args.cor)))
        source = {"cor": args.cor}
    else:
        result = fit_from_data(graph, read_dataset_csv(_read(args.data)))
        source = {"data": args.data}
    query = {"command": "fit", **source}
    _emit(args, result, query=query)


def _cmd_simulate(args):
    model = _load_model(args.graph)
    dataset = simulate(model, args.n, seed=args.seed)
    if args.select:
        dataset = select(dataset, _parse_select(args.select))
    csv_text = write_dataset_csv(dataset)
    if args.out:
        FsPath(args.out).write_text(csv_text, encoding="utf-8")
        query = {
            "command": "simulate",
            "n": args.n,
            "seed": args.seed,
            "select": args.select or "",
            "out": args.out,
        }
        _emit(args, dataset, model=model, query=query)
    else:
        sys.stdout.write(csv_text)


def _cmd_enumerate(args):
    nodes, pairs = _parse_skeleton(args.skeleton)
    R = parse_correlation_csv(_read(args.cor))
    queries = [_parse_query(q) for q in args.query or []]
    result = enumerate_and_fit(pairs, R, queries, cap=args.cap, nodes=nodes)
    query = {
        "command": "enumerate",
        "skeleton": args.skeleton,
        "queries": [f"{e}:{o}" + (":" + "+".join(f) if f else "") for e, o, f in queries],
    }
    _emit(args, result, query=query)


def _cmd_intervene(args):
    model = _load_model(args.graph)
    report = predict_intervention(model, args.target, args.delta)
    query = {"command": "intervene", "target": args.target, "delta": args.delta}
    _emit(args, report, model=model, query=query)


def _cmd_serve(args):
    from .server import run_server

    host, _, port = args.bind.rpartition(":")
    if not host or not port.isdigit():
        raise ValueError(f"--bind must look like HOST:PORT, got {args.bind!r}")
    run_server(host, int(port))


# --------------------------------------------------------------------------
# parser
# --------------------------------------------------------------------------


def _add_output_flags(p):
    fmt = p.add_mutually_exclusive_group()
    fmt.add_argument("--json", action="store_true", help="JSON report (default)")
    fmt.add_argument("--table", action="store_true", help="aligned text instead of JSON")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="causalpaths",
        description="Causal path analysis on weighted DAGs with bidirected edges.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("paths", help="enumerate paths and their open/blocked status")
    p.add_argument("--graph", required=True)
    p.add_argument("--from", dest="source", required=True)
    p.add_argument("--to", dest="target", required=True)
    p.add_argument("--adjust", default="", help="comma-separated adjusted nodes")
    p.add_argument("--max-path-len", type=int, default=DEFAULT_MAX_LEN)
    _add_output_flags(p)
    p.set_defaults(func=_cmd_paths)

    p = sub.add_parser("adjust", help="valid and minimal backdoor adjustment sets")
    p.add_argument("--graph", required=True)
    p.add_argument("--exposure", required=True)
    p.add_argument("--outcome", required=True)
    _add_output_flags(p)
    p.set_defaults(func=_cmd_adjust)

    p = sub.add_parser("effect", help="total/direct/indirect effect along directed paths")
    p.add_argument("--graph", required=True)
    p.add_argument("--exposure", required=True)
    p.add_argument("--outcome", required=True)
    p.add_argument("--fixed", default="", help="nodes held fixed by intervention")
    _add_output_flags(p)
    p.set_defaults(func=_cmd_effect)

    p = sub.add_parser("decompose", help="split a correlation into causal and non-causal treks")
    p.add_argument("--graph", required=True)
    p.add_argument("--exposure", required=True)
    p.add_argument("--outcome", required=True)
    _add_output_flags(p)
    p.set_defaults(func=_cmd_decompose)

    p = sub.add_parser("regress", help="standardized regression from a correlation matrix or model")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--cor")
    src.add_argument("--graph")
    p.add_argument("--outcome", required=True)
    p.add_argument("--predictors", default="", help="comma-separated predictor names")
    _add_output_flags(p)
    p.set_defaults(func=_cmd_regress)

    p = sub.add_parser("implied", help="model-implied correlation matrix")
    p.add_argument("--graph", required=True)
    p.add_argument("--method", choices=("matrix", "tracing"), default="matrix")
    p.add_argument("--csv", action="store_true", help="emit correlation CSV instead of a report")
    _add_output_flags(p)
    p.set_defaults(func=_cmd_implied)

    p = sub.add_parser("fit", help="fit edge coefficients to observed correlations or data")
    p.add_argument("--graph", required=True)
    p.add_argument("--cor")
    p.add_argument("--data")
    _add_output_flags(p)
    p.set_defaults(func=_cmd_fit)

    p = sub.add_parser("simulate", help="draw a standardized Gaussian dataset from the model")
    p.add_argument("--graph", required=True)
    p.add_argument("--n", type=int, default=10**6)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--select", default="", help="selection rule NODE>THRESH or NODE<THRESH")
    p.add_argument("--out", default="", help="write CSV here and print a summary report")
    _add_output_flags(p)
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("enumerate", help="fit every acyclic orientation of a skeleton")
    p.add_argument("--skeleton", required=True, help="complete:A,B,C or pair list A-B,B-C")
    p.add_argument("--cor", required=True)
    p.add_argument("--query", action="append", help="EXPOSURE:OUTCOME[:FIX1+FIX2] (repeatable)")
    p.add_argument("--cap", type=int, default=DEFAULT_ORIENTATION_CAP)
    _add_output_flags(p)
    p.set_defaults(func=_cmd_enumerate)

    p = sub.add_parser("intervene", help="predict per-node shifts for an intervention")
    p.add_argument("--graph", required=True)
    p.add_argument("--target", required=True)
    p.add_argument("--delta", type=float, required=True)
    _add_output_flags(p)
    p.set_defaults(func=_cmd_intervene)

    p = sub.add_parser("serve", help="serve the engine over a local HTTP socket")
    p.add_argument("--bind", default="127.0.0.1:8350")
    p.set_defaults(func=_cmd_serve)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        args.func(args)
    except (CausalPathsError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except KeyboardInterrupt:
        return 130
    except Exception as exc:  # internal problem: diagnose briefly, never a traceback
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
