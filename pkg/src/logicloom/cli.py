"""Command-line surface.

Subcommands: lf (parse | validate | exec), eval, pipeline, annotate, synth,
serve. Every command writes machine-readable JSON on stdout alongside any
human-oriented table. Exit codes: 0 ok, 1 input or structural error, 2
execution or model error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .dsl import (
    LfExecError,
    LfParseError,
    execute_lf,
    parse_lf,
    print_lf,
    validate_lf,
)
from .metrics import EvalBundle, bleu4, exec_accuracy, lf_accuracy, rouge
from .models import ModelError, Role, build_model, serialize_input
from .pipeline import PipelineConfig, PipelineError, run_pipeline
from .synth import make_corpus
from .tables import export_corpus, load_tables
from .tokenize import text_tokenize

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_EXEC = 2

logger = logging.getLogger(__name__)


def _emit(doc: dict) -> None:
    print(json.dumps(doc, ensure_ascii=False))


def _load_single_table(path: str):
    corpus = load_tables(path, "json" if path.endswith(".json") else "csv-dir")
    if not corpus.tables:
        raise SystemExit(EXIT_INPUT)
    return next(iter(corpus.tables.values()))


def _read_lf(args) -> str:
    if args.lf == "-":
        return sys.stdin.read()
    return args.lf


def cmd_lf(args) -> int:
    surface = _read_lf(args)
    try:
        ast = parse_lf(surface)
    except LfParseError as exc:
        _emit({"error": str(exc), "kind": "parse"})
        return EXIT_INPUT
    if args.lf_command == "parse":
        _emit({"canonical": print_lf(ast)})
        return EXIT_OK
    table = _load_single_table(args.table) if args.table else None
    report = validate_lf(ast, table)
    if args.lf_command == "validate":
        _emit(report.to_json())
        return EXIT_OK if report.structurally_valid else EXIT_INPUT
    if not report.structurally_valid:
        _emit(report.to_json())
        return EXIT_INPUT
    if table is None:
        _emit({"error": "exec requires --table", "kind": "usage"})
        return EXIT_INPUT
    try:
        value = execute_lf(ast, table)
    except LfExecError as exc:
        _emit({"error": str(exc), "kind": exc.kind})
        return EXIT_EXEC
    _emit(value.to_json())
    return EXIT_OK


def _read_lines(path: str) -> list[str]:
    return Path(path).read_text(encoding="utf-8").splitlines()


def cmd_eval(args) -> int:
    predictions = _read_lines(args.pred)
    if args.kind == "text":
        golds = _read_lines(args.gold)
        if len(predictions) != len(golds):
            _emit({"error": f"misaligned files: {len(predictions)} vs {len(golds)} lines"})
            return EXIT_INPUT
        candidates = [text_tokenize(p) for p in predictions]
        references = [text_tokenize(g) for g in golds]
        bundle = EvalBundle(
            n=len(predictions),
            bleu4=bleu4(candidates, references),
            rouge1=rouge(candidates, references, 1),
            rouge2=rouge(candidates, references, 2),
            rouge4=rouge(candidates, references, 4),
            rougeL=rouge(candidates, references, "L"),
        )
    else:
        if not args.tables:
            _emit({"error": "--kind lf requires --tables", "kind": "usage"})
            return EXIT_INPUT
        gold_docs = [json.loads(line) for line in _read_lines(args.gold) if line.strip()]
        if len(predictions) != len(gold_docs):
            _emit({"error": f"misaligned files: {len(predictions)} vs {len(gold_docs)} items"})
            return EXIT_INPUT
        tables_corpus = load_tables(args.tables, args.tables_format)
        try:
            tables = [tables_corpus.tables[doc["table_id"]] for doc in gold_docs]
        except KeyError as exc:
            _emit({"error": f"unknown table id {exc}"})
            return EXIT_INPUT
        bundle = EvalBundle(
            n=len(predictions),
            lf_acc=lf_accuracy(predictions, [doc["lf"] for doc in gold_docs]),
            exec_acc=exec_accuracy(predictions, tables, args.exec_mode),
        )
    _emit(bundle.to_json())
    print(bundle.format_table(), file=sys.stderr)
    return EXIT_OK


def cmd_pipeline(args) -> int:
    try:
        config = PipelineConfig.from_json(args.config)
        summary = run_pipeline(config, run_dir_override=args.run_dir)
    except PipelineError as exc:
        _emit({"error": str(exc), "stage": exc.stage})
        return EXIT_EXEC
    except (OSError, json.JSONDecodeError, ValueError) as exc:
        _emit({"error": str(exc)})
        return EXIT_INPUT
    _emit(summary)
    return EXIT_OK


def cmd_annotate(args) -> int:
    """Silver logical-form annotation: one generated LF per (table, text) pair."""
    tables = load_tables(args.tables, args.tables_format).tables
    pairs = []
    for line in _read_lines(args.pairs):
        if not line.strip():
            continue
        doc = json.loads(line)
        if doc["table_id"] not in tables:
            _emit({"error": f"unknown table id {doc['table_id']!r}"})
            return EXIT_INPUT
        pairs.append(doc)
    model = build_model(json.loads(args.model) if args.model.strip().startswith("{")
                        else {"kind": args.model})
    sources = [
        serialize_input(Role.LG, doc.get("logic_type", "count"), tables[doc["table_id"]],
                        doc["text"]).text
        for doc in pairs
    ]
    generated = model.generate(sources, args.beam_size)
    out = open(args.out, "w", encoding="utf-8") if args.out else sys.stdout
    try:
        for doc, lf in zip(pairs, generated):
            table = tables[doc["table_id"]]
            record = {"table_id": doc["table_id"], "text": doc["text"], "lf": lf,
                      "parseable": False, "table_valid": False, "exec_result": None}
            try:
                ast = parse_lf(lf)
                record["parseable"] = True
                record["table_valid"] = validate_lf(ast, table).table_valid
                try:
                    record["exec_result"] = execute_lf(ast, table).to_json()
                except LfExecError as exc:
                    record["exec_result"] = {"error": exc.kind}
            except LfParseError:
                pass
            out.write(json.dumps(record, ensure_ascii=False) + "\n")
    finally:
        if args.out:
            out.close()
    return EXIT_OK


def cmd_synth(args) -> int:
    corpus = make_corpus(args.tables, args.per_table, args.seed)
    export_corpus(corpus, args.out)
    _emit({"tables": len(corpus.tables), "instances": len(corpus.instances), "out": args.out})
    return EXIT_OK


def cmd_serve(args) -> int:
    from . import serve

    argv = []
    if args.tcp is not None:
        argv += ["--tcp", str(args.tcp), "--host", args.host]
    return serve.main(argv)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="logicloom")
    parser.add_argument("--verbose", action="store_true", help="log at INFO level")
    sub = parser.add_subparsers(dest="command", required=True)

    p_lf = sub.add_parser("lf", help="parse, validate, or execute a logical form")
    p_lf.add_argument("lf_command", choices=["parse", "validate", "exec"])
    p_lf.add_argument("lf", help="surface logical form, or - for stdin")
    p_lf.add_argument("--table", help="CSV file / table JSON for validate and exec")
    p_lf.set_defaults(func=cmd_lf)

    p_eval = sub.add_parser("eval", help="score prediction files against gold files")
    p_eval.add_argument("--kind", choices=["text", "lf"], default="text")
    p_eval.add_argument("--pred", required=True, help="one prediction per line")
    p_eval.add_argument("--gold", required=True,
                        help="one reference per line (text) or JSONL {table_id, lf} (lf)")
    p_eval.add_argument("--tables", help="tables path for --kind lf")
    p_eval.add_argument("--tables-format", default="json", choices=["json", "csv-dir"])
    p_eval.add_argument("--exec-mode", default="truthy", choices=["truthy", "error-free"])
    p_eval.set_defaults(func=cmd_eval)

    p_pipe = sub.add_parser("pipeline", help="run augment -> weigh -> train -> evaluate")
    p_pipe.add_argument("--config", required=True, help="pipeline config JSON")
    p_pipe.add_argument("--run-dir", help="override the run directory "
                                          "(or set LOGICLOOM_RUN_DIR)")
    p_pipe.set_defaults(func=cmd_pipeline)

    p_ann = sub.add_parser("annotate", help="generate silver LFs for (table, text) pairs")
    p_ann.add_argument("--pairs", required=True, help="JSONL of {table_id, text}")
    p_ann.add_argument("--tables", required=True)
    p_ann.add_argument("--tables-format", default="json", choices=["json", "csv-dir"])
    p_ann.add_argument("--model", default="retrieval",
                       help="model kind or JSON spec for the LF generator")
    p_ann.add_argument("--beam-size", type=int, default=3)
    p_ann.add_argument("--out", help="output JSONL path (default stdout)")
    p_ann.set_defaults(func=cmd_annotate)

    p_synth = sub.add_parser("synth", help="write a synthetic corpus")
    p_synth.add_argument("--tables", type=int, default=50)
    p_synth.add_argument("--per-table", type=int, default=2)
    p_synth.add_argument("--seed", type=int, default=0)
    p_synth.add_argument("--out", required=True)
    p_synth.set_defaults(func=cmd_synth)

    p_serve = sub.add_parser("serve", help="serve a retrieval model over the wire protocol")
    p_serve.add_argument("--tcp", type=int, metavar="PORT")
    p_serve.add_argument("--host", default="127.0.0.1")
    p_serve.set_defaults(func=cmd_serve)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ModelError as exc:
        _emit({"error": str(exc)})
        return EXIT_EXEC
    except (OSError, json.JSONDecodeError, ValueError) as exc:
        _emit({"error": str(exc)})
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
