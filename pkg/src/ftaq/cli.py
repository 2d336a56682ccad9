"""``ftaq`` command line: validate models, run LangPFL scripts, direct analyses.

Exit codes: 0 success, 1 parse/desugar/I-O error, 2 invalid model,
3 false verdict under ``--fail-on-false``, 4 evaluation error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from pathlib import Path

from . import __version__
from .atm import DOMAINS, INF, minimal_attacks, metric_value
from .bfl import minimal_cut_sets, minimal_path_sets
from .errors import FtaqError, ModelValidationError
from .langpfl import desugar, parse_script
from .logic import Atom
from .modelfmt import ModelSource, parse_model
from .model import DEFAULT_MAX_LEAVES, Side, TreeModel
from .pfl import ENGINES, event_probability
from .runner import plain, run_query

TOOL = "ftaq"
EXIT_OK, EXIT_PARSE, EXIT_INVALID, EXIT_FALSE, EXIT_EVAL = 0, 1, 2, 3, 4
SCHEMA_PATH = Path(__file__).with_name("report.schema.json")


def _max_leaves(value: str) -> int:
    n = int(value)
    if n < 1:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return n


class _ArgumentParser(argparse.ArgumentParser):
    """Usage errors count as input errors (exit 1), not as invalid models."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_PARSE, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _ArgumentParser(prog=TOOL, description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"{TOOL} {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--format", choices=("text", "json"), default="text")
        p.add_argument("--canonical", action="store_true",
                       help="omit wall-clock timings so JSON output is byte-stable")

    def evaluation(p: argparse.ArgumentParser) -> None:
        p.add_argument("--engine", choices=ENGINES[::-1], default="auto")
        # argparse runs string defaults through ``type``, so a bad env value is a usage error
        p.add_argument("--max-leaves", type=_max_leaves,
                       default=os.environ.get("FTAQ_MAX_LEAVES", DEFAULT_MAX_LEAVES),
                       help="exhaustive-enumeration guard (default 24, env FTAQ_MAX_LEAVES)")
        p.add_argument("--tolerance", type=float, default=1e-9)
        p.add_argument("--fail-on-false", action="store_true",
                       help="exit 3 when a check verdict is false")

    p = sub.add_parser("validate", help="check a model for well-formedness")
    p.add_argument("model")
    common(p)

    p = sub.add_parser("query", help="run LangPFL scripts against a model")
    p.add_argument("model")
    p.add_argument("scripts", nargs="+")
    common(p)
    evaluation(p)

    p = sub.add_parser("analyze", help="direct analyses without a script")
    p.add_argument("model")
    p.add_argument("analysis", choices=("mcs", "mps", "prob", "metric", "attacks"))
    p.add_argument("element")
    p.add_argument("--domain", choices=tuple(DOMAINS), default="cost")
    common(p)
    evaluation(p)
    return parser


# -- reports -------------------------------------------------------------------


def new_report(model_path: str) -> dict:
    return {"tool": TOOL, "version": __version__,
            "model": {"name": None, "path": model_path, "reconstruction": False, "tags": []},
            "records": [], "error": None}


def describe_model(report: dict, model: TreeModel) -> None:
    report["model"].update(name=model.name, reconstruction="reconstruction" in model.tags,
                           tags=sorted(model.tags))


def error_entry(exc: Exception, code: int) -> dict:
    if isinstance(exc, FtaqError):
        entry = {"type": type(exc).__name__, "message": exc.message, "origin": exc.origin,
                 "line": exc.line, "column": exc.column, "exit_code": code}
        if isinstance(exc, ModelValidationError):
            entry["violations"] = [v._asdict() for v in exc.report]
        return entry
    return {"type": type(exc).__name__, "message": str(exc), "origin": None, "line": None,
            "column": None, "exit_code": code}


def canonical_json(report: dict) -> str:
    """Byte-stable rendering: sorted keys and no wall-clock timings."""
    stripped = dict(report)
    stripped["records"] = [{k: v for k, v in r.items() if k != "wall_time_ms"} for r in report["records"]]
    return json.dumps(stripped, indent=2, sort_keys=True)


def render_json(report: dict, canonical: bool) -> str:
    if canonical:
        return canonical_json(report)
    return json.dumps(report, indent=2, sort_keys=True)


def _fmt_value(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, list):
        return "[" + ", ".join("{" + ", ".join(s) + "}" for s in value) + "]"
    return str(value)


def render_text(report: dict) -> str:
    model = report["model"]
    lines = []
    if model["name"]:
        note = " (reconstruction)" if model["reconstruction"] else ""
        lines.append(f"model {model['name']}{note}")
    for record in report["records"]:
        span = record.get("span")
        where = f"{span['source']}:{span['line']}:{span['column']}" if span else record["kind"]
        lines.append(f"{where} [{record['engine']}] {record['query']}")
        label = {"verdict": "verdict", "value": "value", "sets": "sets"}[record["kind"]]
        lines.append(f"  {label}: {_fmt_value(record['result'])}")
        witness = record.get("witness")
        if witness is not None:
            if "strategy" in witness:
                lines.append(f"  witness strategy: {{{', '.join(witness['strategy'])}}}")
            else:
                lines.append(f"  witness (leaves at 1): {{{', '.join(witness['ones'])}}}")
        for flag in record.get("flags", []):
            lines.append(f"  flag: {flag}")
        for warning in record.get("warnings", []):
            lines.append(f"  warning: {warning}")
        for entry in record.get("trace", []):
            if "strategy" in entry:
                values = ", ".join(_fmt_value(e["value"]) for e in entry["trace"] if "value" in e)
                lines.append(f"  strategy {{{', '.join(entry['strategy'])}}}: "
                             f"{_fmt_value(entry['holds'])} ({values})")
            else:
                lines.append("  trace: " + json.dumps(entry, sort_keys=True))
    return "\n".join(lines)


def _emit(report: dict, args, out) -> None:
    if args.format == "json":
        print(render_json(report, args.canonical), file=out)
    else:
        text = render_text(report)
        if text:
            print(text, file=out)


def _fail(report: dict, exc: Exception, code: int, args, out, err) -> int:
    report["error"] = error_entry(exc, code)
    print(f"{TOOL}: error: {exc}", file=err)
    if args.format == "json":
        print(render_json(report, args.canonical), file=out)
    return code


def _load_model(path: str) -> TreeModel:
    return parse_model(ModelSource.from_path(path), check=True)


def _code_for(exc: Exception) -> int:
    if isinstance(exc, FtaqError):
        return exc.exit_code
    if isinstance(exc, (OSError, UnicodeDecodeError)):
        return EXIT_PARSE
    raise exc


# -- commands ------------------------------------------------------------------


def cmd_validate(args, out, err) -> int:
    report = new_report(args.model)
    try:
        model = parse_model(ModelSource.from_path(args.model), check=True)
    except ModelValidationError as exc:
        describe_model(report, exc.model)
        report["violations"] = [v._asdict() for v in exc.report]
        if args.format == "text":
            for v in exc.report:
                print(f"{v.node}: {v.rule} {v.detail}".rstrip(), file=out)
        return _fail(report, exc, EXIT_INVALID, args, out, err)
    except (FtaqError, OSError, UnicodeDecodeError) as exc:
        return _fail(report, exc, _code_for(exc), args, out, err)
    describe_model(report, model)
    report["violations"] = []
    if args.format == "json":
        print(render_json(report, args.canonical), file=out)
    else:
        print(f"ok: model {model.name} ({len(model.nodes)} nodes)", file=out)
    return EXIT_OK


def _timed_record(base: dict, evaluate) -> dict:
    start = time.perf_counter()
    record = {**base, **evaluate()}
    record["wall_time_ms"] = round((time.perf_counter() - start) * 1000.0, 3)
    return record


def cmd_query(args, out, err) -> int:
    report = new_report(args.model)
    try:
        model = _load_model(args.model)
        describe_model(report, model)
        scripts = []
        for path in args.scripts:
            text = Path(path).read_text(encoding="utf-8")
            script = parse_script(text, path)
            scripts.append((path, desugar(script, model)))
        for path, query in scripts:
            base = {"span": {"source": path, "line": query.span.line, "column": query.span.col},
                    "engine": query.engine, "kind": query.kind, "query": query.describe(),
                    "source": query.source}
            try:
                report["records"].append(_timed_record(base, lambda q=query: run_query(
                    model, q, engine=args.engine, max_leaves=args.max_leaves, tol=args.tolerance)))
            except FtaqError as exc:
                # evaluation errors point at the payload they came from
                if exc.line is None:
                    exc.line, exc.column, exc.origin = query.span.line, query.span.col, path
                raise
    except (FtaqError, OSError, UnicodeDecodeError) as exc:
        return _fail(report, exc, _code_for(exc), args, out, err)
    _emit(report, args, out)
    if args.fail_on_false and any(r["kind"] == "verdict" and r["result"] is False
                                  for r in report["records"]):
        return EXIT_FALSE
    return EXIT_OK


def _analysis(model: TreeModel, args) -> dict:
    element = args.element
    model[element]
    if args.analysis == "mcs":
        return {"kind": "sets", "query": f"MCS({element})",
                "result": [sorted(s) for s in minimal_cut_sets(model, element, max_leaves=args.max_leaves)]}
    if args.analysis == "mps":
        return {"kind": "sets", "query": f"MPS({element})",
                "result": [sorted(s) for s in minimal_path_sets(model, element, max_leaves=args.max_leaves)]}
    if args.analysis == "attacks":
        return {"kind": "sets", "query": f"attacks({element})",
                "result": [sorted(s) for s in minimal_attacks(model, element, max_leaves=args.max_leaves)]}
    if args.analysis == "prob":
        side = model[element].side
        value = event_probability(model, Atom(element), engine=args.engine, max_leaves=args.max_leaves,
                                  side=side)
        return {"kind": "value", "query": f"{'Pr' if side is Side.FAULT else 'Prob'}({element})",
                "result": value}
    value = metric_value(model, args.domain, element, max_leaves=args.max_leaves)
    record = {"kind": "value", "query": f"{args.domain}({element})", "result": value}
    if value == INF:
        record["flags"] = ["unattackable"]
    return record


def cmd_analyze(args, out, err) -> int:
    report = new_report(args.model)
    try:
        model = _load_model(args.model)
        describe_model(report, model)
        engine = "bfl" if args.analysis in ("mcs", "mps") else "atm"
        if args.analysis == "prob" and model[args.element].side is Side.FAULT:
            engine = "pfl"

        def evaluate():
            record = {"result": None, "trace": [], "witness": None, "flags": [], "warnings": []}
            record.update(_analysis(model, args))
            return plain(record)

        report["records"].append(_timed_record({"span": None, "engine": engine}, evaluate))
    except (FtaqError, OSError, UnicodeDecodeError) as exc:
        return _fail(report, exc, _code_for(exc), args, out, err)
    _emit(report, args, out)
    return EXIT_OK


COMMANDS = {"validate": cmd_validate, "query": cmd_query, "analyze": cmd_analyze}


def main(argv=None, out=None, err=None) -> int:
    out = sys.stdout if out is None else out
    err = sys.stderr if err is None else err
    args = build_parser().parse_args(argv)
    return COMMANDS[args.command](args, out, err)


if __name__ == "__main__":
    sys.exit(main())
