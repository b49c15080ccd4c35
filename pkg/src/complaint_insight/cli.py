"""Command-line interface.

Exit codes: 0 success, 1 usage/config error, 2 data error, 3 internal error.
"""
from __future__ import annotations

import argparse
import datetime as dt
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import features as F
from .artifacts import load_model
from .config import PipelineConfig
from .errors import (
    ArtifactError,
    ComplaintInsightError,
    ConfigError,
    FeatureError,
    IngestError,
    LearnError,
    PipelineError,
    TaskMismatch,
    TopicsError,
    WidthMismatch,
)
from .ingest import RowError, SchemaSpec, open_records, summarize

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_INTERNAL = 0, 1, 2, 3
log = logging.getLogger("complaint_insight")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _global_flags() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--config", default=argparse.SUPPRESS, help="pipeline config (YAML)")
    p.add_argument("--seed", type=int, default=argparse.SUPPRESS)
    p.add_argument("--out", default=argparse.SUPPRESS, help="output directory or file")
    p.add_argument("--format", choices=("text", "machine"), default=argparse.SUPPRESS)
    p.add_argument("-v", "--verbose", action="store_true", default=argparse.SUPPRESS)
    return p


def build_parser() -> argparse.ArgumentParser:
    common = _global_flags()
    parser = _Parser(prog="complaint-insight", parents=[common],
                     description="Complaint response prediction and topic discovery.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def input_opts(p, required=True):
        p.add_argument("input", nargs=None if required else "?", help="CSV or json-lines file")
        p.add_argument("--schema", help="schema file mapping canonical fields to source columns")
        p.add_argument("--input-format", choices=("csv", "json-lines"))
        p.add_argument("--strict", action="store_true", help="abort on the first malformed row")

    p = sub.add_parser("summarize", parents=[common], help="dataset composition")
    input_opts(p)

    p = sub.add_parser("train", parents=[common], help="run the full pipeline and save models")
    input_opts(p, required=False)

    p = sub.add_parser("evaluate", parents=[common], help="score a saved model on labelled data")
    p.add_argument("--model", required=True)
    input_opts(p)

    p = sub.add_parser("predict", parents=[common], help="per-record predictions as JSON lines")
    p.add_argument("--model", required=True)
    p.add_argument("--task", choices=tuple(F.TASKS))
    input_opts(p)

    p = sub.add_parser("topics", parents=[common], help="LDA topics of the narratives")
    input_opts(p)
    p.add_argument("--k", type=int)
    p.add_argument("--sweeps", type=int)
    p.add_argument("--top-n", type=int)

    p = sub.add_parser("synth", parents=[common], help="write a synthetic CFPB-format file")
    p.add_argument("output", nargs="?", help="destination (default: --out or stdout)")
    p.add_argument("--rows", type=int, default=10_000)
    p.add_argument("--companies", type=int, default=400)
    p.add_argument("--issues", type=int, default=40)
    p.add_argument("--signal", type=float, default=3.0)
    p.add_argument("--narrative-rate", type=float, default=0.6)
    p.add_argument("--json-lines", action="store_true")

    p = sub.add_parser("report", parents=[common], help="render a saved machine-readable report")
    p.add_argument("report", help="report.json written by `train`")
    return parser


def _config(args) -> PipelineConfig:
    cfg = PipelineConfig.load(args.config) if getattr(args, "config", None) else PipelineConfig()
    if getattr(args, "seed", None) is not None:
        cfg.seed = args.seed
    if getattr(args, "input", None):
        cfg.input = args.input
    if getattr(args, "schema", None):
        cfg.schema = args.schema
    if getattr(args, "input_format", None):
        cfg.format = args.input_format
    if getattr(args, "strict", False):
        cfg.strict = True
    return cfg


def _schema(cfg: PipelineConfig) -> SchemaSpec:
    from .pipeline import resolve_schema

    return resolve_schema(cfg)


def _emit(text: str, out=None):
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _fmt(args) -> str:
    return getattr(args, "format", None) or "text"


# -- subcommands -------------------------------------------------------------

def cmd_summarize(args) -> int:
    cfg = _config(args)
    with open_records(cfg.input, _schema(cfg)) as stream:
        summary = summarize(stream)
    doc = summary.to_dict()
    if _fmt(args) == "machine":
        text = json.dumps(doc, indent=2) + "\n"
    else:
        lines = [f"records: {doc['row_count']}", f"rejected rows: {doc['row_errors']}",
                 f"date range: {doc['date_range'][0]} .. {doc['date_range'][1]}",
                 f"send-before-receive rows: {doc['date_order_violations']}",
                 f"narratives: {doc['narratives']}"]
        lines += [f"distinct {k}: {v}" for k, v in doc["cardinality"].items()]
        lines += [f"missing {k}: {v}" for k, v in doc["missing"].items()]
        lines += [f"timely {k}: {v}" for k, v in doc["timely_counts"].items()]
        lines += [f"response {k}: {v}" for k, v in doc["response_counts"].items()]
        text = "\n".join(lines) + "\n"
    _emit(text)
    return EXIT_OK


def cmd_train(args) -> int:
    from .pipeline import run_pipeline
    from .report import render_report

    cfg = _config(args)
    if getattr(args, "out", None):
        cfg.output_dir = args.out
    report = run_pipeline(cfg)
    sys.stdout.write(render_report(report, _fmt(args)).decode("utf-8"))
    log.info("outputs written to %s", cfg.output_dir)
    return EXIT_OK


def _encode_all(records, artifact):
    task = F.TASKS[artifact.task]
    origin = dt.date.fromisoformat(artifact.metadata.get("date_origin", "2011-01-01"))
    rows = [F.encode_record(r, task, artifact.encoders, origin) for r in records]
    X = np.array(rows, dtype=np.float64).reshape(len(rows), task.width)
    if artifact.model.n_features != task.width:
        raise WidthMismatch(f"model expects {artifact.model.n_features} features, task has {task.width}")
    return X


def cmd_evaluate(args) -> int:
    from .pipeline import evaluate_binary, evaluate_multiclass

    cfg = _config(args)
    artifact = load_model(args.model)
    task = F.TASKS[artifact.task]
    with open_records(cfg.input, _schema(cfg)) as stream:
        records = [r for r in stream if not isinstance(r, RowError)]
    ds = F.build_features(records, task, artifact.encoders,
                          dt.date.fromisoformat(artifact.metadata.get("date_origin", "2011-01-01")))
    if task.name == "timely":
        result = evaluate_binary(artifact.kind, artifact.model, ds, artifact.metadata.get("threshold", 0.5))
    else:
        result = evaluate_multiclass(artifact.model, ds)
    doc = {"task": task.name, "model": artifact.kind, "rows": len(ds), "dropped": ds.dropped, **result}
    if _fmt(args) == "machine":
        _emit(json.dumps(doc, indent=2) + "\n", getattr(args, "out", None))
        return EXIT_OK
    lines = [f"{artifact.kind} on {task.name}: {len(ds)} rows ({ds.dropped} without target)"]
    if task.name == "timely":
        auc = "n/a" if result["auc"] is None else f"{result['auc']:.4f}"
        lines.append(f"precision {result['precision']:.4f}  recall {result['recall']:.4f}  auc {auc}")
    else:
        for name, m in result["per_class"].items():
            lines.append(f"{name:<34} precision {m['precision']:.4f}  recall {m['recall']:.4f}  support {m['support']}")
    _emit("\n".join(lines) + "\n", getattr(args, "out", None))
    return EXIT_OK


def predict_records(artifact, records):
    """One output dict per input item, in input order."""
    items = list(records)
    good = [r for r in items if not isinstance(r, RowError)]
    X = _encode_all(good, artifact)
    model, kind = artifact.model, artifact.kind
    threshold = artifact.metadata.get("threshold", 0.5)
    out = []
    if artifact.task == "timely":
        scores = model.decision_function(X) if len(good) else np.empty(0)
        probs = model.predict_proba(X)[:, 1] if kind != "svm" and len(good) else None
    else:
        probs = model.predict_proba(X) if len(good) else None
    j = 0
    for item in items:
        if isinstance(item, RowError):
            out.append({"line": item.line, "error": item.kind, "message": item.message})
            continue
        rec = {"complaint_id": item.complaint_id}
        if artifact.task == "timely":
            if kind == "svm":
                rec["margin"] = float(scores[j])
                rec["timely"] = "Yes" if scores[j] >= 0.0 else "No"
            else:
                rec["probability"] = float(probs[j])
                rec["timely"] = "Yes" if probs[j] >= threshold else "No"
        else:
            row = probs[j]
            rec["company_response"] = artifact.class_names[int(np.argmax(row))]
            rec["probabilities"] = {n: float(p) for n, p in zip(artifact.class_names, row)}
        out.append(rec)
        j += 1
    return out


def cmd_predict(args) -> int:
    cfg = _config(args)
    artifact = load_model(args.model)
    if args.task and args.task != artifact.task:
        raise TaskMismatch(f"artifact is for task {artifact.task!r}, not {args.task!r}")
    with open_records(cfg.input, _schema(cfg).with_options(targets_optional=True)) as stream:
        results = predict_records(artifact, stream)
    _emit("".join(json.dumps(r) + "\n" for r in results), getattr(args, "out", None))
    return EXIT_OK


def cmd_topics(args) -> int:
    from .pipeline import load_records, run_topics

    cfg = _config(args)
    for attr, key in (("k", "K"), ("sweeps", "sweeps"), ("top_n", "top_n")):
        if getattr(args, attr) is not None:
            setattr(cfg.topics, key, getattr(args, attr))
    records, _ = load_records(cfg.input, _schema(cfg))
    section = run_topics(records, cfg.topics, cfg.seed)
    if _fmt(args) == "machine":
        _emit(json.dumps(section, indent=2) + "\n", getattr(args, "out", None))
        return EXIT_OK
    from .report import _topics_section
    from .pipeline import RunReport

    text = "\n".join(_topics_section(RunReport({}, {}, {}, topics=section))) + "\n"
    _emit(text, getattr(args, "out", None))
    return EXIT_OK


def cmd_synth(args) -> int:
    from .synth import SynthSpec, write_synthetic

    seed = getattr(args, "seed", None)
    spec = SynthSpec(rows=args.rows, companies=args.companies, issues=args.issues,
                     seed=0 if seed is None else seed, signal=args.signal,
                     narrative_rate=args.narrative_rate)
    schema = SchemaSpec.default(format="json-lines" if args.json_lines else "csv")
    dest = args.output or getattr(args, "out", None)
    if dest:
        write_synthetic(spec, dest, schema)
    else:
        write_synthetic(spec, sys.stdout, schema)
    return EXIT_OK


def cmd_report(args) -> int:
    from .pipeline import RunReport
    from .report import render_report

    try:
        doc = json.loads(Path(args.report).read_text(encoding="utf-8"))
        report = RunReport.from_dict(doc)
    except OSError as exc:
        raise ConfigError(f"cannot read {args.report}: {exc.strerror}") from None
    except (ValueError, KeyError) as exc:
        raise IngestError(f"{args.report}: not a run report ({exc})") from None
    sys.stdout.write(render_report(report, _fmt(args)).decode("utf-8"))
    return EXIT_OK


COMMANDS = {
    "summarize": cmd_summarize,
    "train": cmd_train,
    "evaluate": cmd_evaluate,
    "predict": cmd_predict,
    "topics": cmd_topics,
    "synth": cmd_synth,
    "report": cmd_report,
}

DATA_ERRORS = (IngestError, FeatureError, LearnError, TopicsError, ArtifactError)


def exit_code_for(exc: BaseException) -> int:
    if isinstance(exc, PipelineError):
        exc = exc.cause
    if isinstance(exc, ConfigError):
        return EXIT_USAGE
    if isinstance(exc, DATA_ERRORS):
        return EXIT_DATA
    return EXIT_INTERNAL


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        # --help exits 0, usage errors exit 1
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if getattr(args, "verbose", False) else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except ComplaintInsightError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exit_code_for(exc)
    except BrokenPipeError:
        # downstream reader closed early (e.g. piped into head)
        sys.stdout = open(os.devnull, "w")
        return EXIT_OK
    except Exception as exc:  # noqa: BLE001
        log.exception("internal error")
        print(f"internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
