"""Command-line entry points: ``parsekit serve`` and ``parsekit parse``.

``serve`` runs the REST server in the foreground.  ``parse`` annotates one
document per input line (raw text by default, JSON token lists with
``--tokenized``) and prints one Document JSON per line, byte-stable across
runs.  Exit codes: 0 ok, 1 bad input, 2 bad configuration.
"""

from __future__ import annotations

import argparse
import json
import sys

from .document import doc_to_json
from .pipeline import PipelineError, RegistryError, normalize_tasks, registry_for
from .server import ServerConfig, serve

OK = 0
INPUT_ERROR = 1
CONFIG_ERROR = 2


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="parsekit",
        description="Multi-task NLP annotation: batch parsing and a REST server.",
    )
    commands = parser.add_subparsers(dest="command", required=True)

    serve_cmd = commands.add_parser("serve", help="run the REST server")
    serve_cmd.add_argument("--host", default="0.0.0.0")
    serve_cmd.add_argument("--port", type=int, default=8000)
    serve_cmd.add_argument("--workers", type=int, default=2)
    serve_cmd.add_argument("--batch-window-ms", type=float, default=5.0)
    serve_cmd.add_argument("--queue-depth", type=int, default=256)
    serve_cmd.add_argument("--sentence-cap", type=int, default=128)
    serve_cmd.add_argument("--manifest", default=None,
                           help="model manifest path (bundled manifest by default)")

    parse_cmd = commands.add_parser(
        "parse", help="annotate one document per input line, JSON per line out"
    )
    parse_cmd.add_argument("input", nargs="?", default=None,
                           help="input file (stdin by default)")
    parse_cmd.add_argument("--tasks", default=None,
                           help="comma-separated task names (all tasks by default)")
    parse_cmd.add_argument("--model", default=None,
                           help="pipeline identifier (picked from tasks by default)")
    parse_cmd.add_argument("--language", default="en")
    parse_cmd.add_argument("--tokenized", action="store_true",
                           help="lines are JSON arrays of token arrays, not raw text")
    parse_cmd.add_argument("--manifest", default=None,
                           help="model manifest path (bundled manifest by default)")
    return parser


def _cmd_serve(args) -> int:
    config = ServerConfig(
        host=args.host,
        port=args.port,
        workers=args.workers,
        batch_window_ms=args.batch_window_ms,
        queue_depth=args.queue_depth,
        sentence_cap=args.sentence_cap,
        manifest=args.manifest,
    )
    try:
        serve(config)
    except (RegistryError, OSError, ValueError) as e:
        print(f"parsekit serve: {e}", file=sys.stderr)
        return CONFIG_ERROR
    return OK


def _parse_line(pipeline, line: str, tokenized: bool, tasks):
    if tokenized:
        data = json.loads(line)
        if not isinstance(data, list):
            raise ValueError("expected a JSON array of token arrays")
    else:
        data = line
    return pipeline.parse(data, tasks)


def _cmd_parse(args) -> int:
    tasks = None
    if args.tasks is not None:
        tasks = [t.strip() for t in args.tasks.split(",") if t.strip()]
    try:
        registry = registry_for(args.manifest)
        if args.model is not None:
            identifier = args.model
        elif tasks is None:
            identifier = registry.default_identifier(args.language)
        else:
            identifier = registry.select(
                tuple(sorted(set(tasks) - {"tok"})), args.language
            )
        pipeline = registry.load(identifier)
        if tasks is not None:
            normalize_tasks(tasks, pipeline.config.tasks)
    except (RegistryError, PipelineError) as e:
        print(f"parsekit parse: {e}", file=sys.stderr)
        return CONFIG_ERROR

    try:
        stream = open(args.input, encoding="utf-8") if args.input else sys.stdin
    except OSError as e:
        print(f"parsekit parse: {e}", file=sys.stderr)
        return CONFIG_ERROR
    try:
        for number, line in enumerate(stream, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                document = _parse_line(pipeline, line, args.tokenized, tasks)
            except (json.JSONDecodeError, ValueError) as e:
                print(f"parsekit parse: line {number}: {e}", file=sys.stderr)
                return INPUT_ERROR
            print(doc_to_json(document))
        return OK
    finally:
        if args.input:
            stream.close()


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    if args.command == "serve":
        return _cmd_serve(args)
    return _cmd_parse(args)


if __name__ == "__main__":
    sys.exit(main())
