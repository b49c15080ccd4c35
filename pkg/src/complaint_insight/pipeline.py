"""End-to-end workflow: ingest, summarize, split, encode, resample, train,
evaluate, topics, then write artifacts and the run report."""
from __future__ import annotations

import dataclasses
import datetime as dt
import json
import logging
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from . import features as F
from . import learn, metrics, topics
from .artifacts import ModelArtifact, save_model
from .config import PipelineConfig
from .errors import ComplaintInsightError, IngestError, PipelineError
from .ingest import RowError, SchemaSpec, open_records, summarize

log = logging.getLogger(__name__)

REPORT_FORMAT = "complaint-insight-report"
REPORT_VERSION = 1
MODEL_LABELS = {
    "gbt": "GBT",
    "logistic": "LR",
    "svm": "SVM",
    "random_forest": "RF",
    "decision_tree": "DT",
}


@dataclass
class RunReport:
    config: dict
    dataset: dict
    split: dict
    timely: Optional[dict] = None
    response: Optional[dict] = None
    topics: Optional[dict] = None
    timings: dict = field(default_factory=dict)

    def to_dict(self, include_timings: bool = False) -> dict:
        doc = {
            "format": REPORT_FORMAT,
            "version": REPORT_VERSION,
            "config": self.config,
            "dataset": self.dataset,
            "split": self.split,
        }
        for key in ("timely", "response", "topics"):
            section = getattr(self, key)
            if section is not None:
                doc[key] = section
        if include_timings:
            doc["timings"] = self.timings
        return doc

    @classmethod
    def from_dict(cls, doc: dict) -> "RunReport":
        if doc.get("format") != REPORT_FORMAT:
            raise ValueError("not a run report document")
        return cls(
            config=doc["config"],
            dataset=doc["dataset"],
            split=doc["split"],
            timely=doc.get("timely"),
            response=doc.get("response"),
            topics=doc.get("topics"),
            timings=doc.get("timings", {}),
        )


def resolve_schema(cfg: PipelineConfig) -> SchemaSpec:
    if cfg.schema:
        schema = SchemaSpec.load(cfg.schema)
    else:
        fmt = cfg.format
        if fmt is None:
            fmt = "json-lines" if Path(cfg.input).suffix in (".jsonl", ".ndjson", ".json") else "csv"
        schema = SchemaSpec.default(format=fmt)
    return schema.with_options(format=cfg.format, strict=cfg.strict or schema.strict)


def load_records(path, schema: SchemaSpec):
    """Parse a whole file. Returns (records, summary)."""
    records = []
    errors = 0
    with open_records(path, schema) as stream:
        for item in stream:
            if isinstance(item, RowError):
                errors += 1
                log.warning("line %d: %s: %s", item.line, item.kind, item.message)
            else:
                records.append(item)
    summary = summarize(records)
    summary.row_errors = errors
    return records, summary


# ---------------------------------------------------------------------------
# training / evaluation helpers

def train_model(kind: str, X, y, n_classes: int, cfg: PipelineConfig):
    m = cfg.models
    if kind == "decision_tree":
        return learn.train_decision_tree(X, m.decision_tree, labels=y, n_classes=n_classes)
    if kind == "random_forest":
        return learn.train_random_forest(X, dataclasses.replace(m.random_forest, seed=cfg.seed),
                                         labels=y, n_classes=n_classes)
    if kind == "gbt":
        return learn.train_gbt(X, m.gbt, labels=y)
    if kind == "logistic":
        return learn.train_logistic(X, m.logistic, labels=y)
    if kind == "svm":
        return learn.train_linear_svm(X, dataclasses.replace(m.svm, seed=cfg.seed), labels=y)
    raise ValueError(f"unknown model kind {kind!r}")


def binary_outputs(kind: str, model, X, threshold: float = 0.5):
    """(predicted labels, ranking scores) for a binary model."""
    scores = model.decision_function(X)
    if kind == "svm":
        return (scores >= 0.0).astype(np.int64), scores
    return model.predict(X, threshold), scores


def evaluate_binary(kind, model, ds: F.EncodedDataset, threshold: float = 0.5) -> dict:
    pred, scores = binary_outputs(kind, model, ds.matrix, threshold)
    cm = metrics.confusion_matrix(ds.labels, pred, 2, ds.class_names)
    p, r = metrics.precision_recall(cm, 1)
    has_both = 0 < int(ds.labels.sum()) < len(ds.labels)
    return {
        "precision": p,
        "recall": r,
        "auc": metrics.auc(ds.labels == 1, scores) if has_both else None,
        "confusion_matrix": cm.to_dict(),
    }


def evaluate_multiclass(model, ds: F.EncodedDataset) -> dict:
    pred = model.predict(ds.matrix) if len(ds) else np.empty(0, dtype=np.int64)
    cm = metrics.confusion_matrix(ds.labels, pred, ds.n_classes, ds.class_names)
    return {
        "per_class": metrics.per_class_metrics(cm).to_dict(),
        "confusion_matrix": cm.to_dict(),
    }


def _importances(model, task: F.TaskSpec) -> dict:
    return {task.features[i]: v for i, v in learn.feature_importance(model).items()}


def _run_task(task: F.TaskSpec, tcfg, train_recs, test_recs, cfg: PipelineConfig,
              timings: dict, artifacts: list) -> dict:
    encoders = F.fit_encoders(train_recs, task)
    train = F.build_features(train_recs, task, encoders, cfg.origin)
    test = F.build_features(test_recs, task, encoders, cfg.origin)
    if len(train) == 0:
        raise IngestError(f"{task.name}: no training rows with a target")
    rows = F.resample(train.labels, tcfg.resampling, cfg.seed)
    fit = train.subset(rows)
    section = {
        "class_names": list(task.class_names),
        "features": list(task.features),
        "encoders_fitted_on": {k: e.fitted_on for k, e in encoders.items()},
        "train_rows": len(train),
        "train_dropped": train.dropped,
        "resampling": tcfg.resampling,
        "resampled_rows": len(fit),
        "resampled_class_counts": np.bincount(fit.labels, minlength=train.n_classes).tolist(),
        "test_rows": len(test),
        "test_dropped": test.dropped,
        "models": {},
        "feature_importance": {},
    }
    if task.name == "timely":
        section["positive_class"] = "Yes"
        section["threshold"] = tcfg.threshold
    for kind in tcfg.models:
        start = time.perf_counter()
        model = train_model(kind, fit.matrix, fit.labels, train.n_classes, cfg)
        timings[f"{task.name}.{kind}"] = time.perf_counter() - start
        if task.name == "timely":
            section["models"][kind] = evaluate_binary(kind, model, test, tcfg.threshold) if len(test) else None
        else:
            section["models"][kind] = evaluate_multiclass(model, test)
        if kind in ("decision_tree", "random_forest", "gbt"):
            section["feature_importance"][kind] = _importances(model, task)
        artifacts.append(ModelArtifact(
            task=task.name,
            kind=kind,
            model=model,
            encoders=encoders,
            class_names=task.class_names,
            metadata={
                "seed": cfg.seed,
                "train_rows": len(train),
                "fit_rows": len(fit),
                "date_origin": cfg.date_origin,
                "threshold": tcfg.threshold,
                "created": dt.datetime.now(dt.timezone.utc).isoformat(timespec="seconds"),
            },
        ))
    return section


def run_topics(records, tcfg, seed: int) -> dict:
    rules = topics.TokenRules.from_file(tcfg.stopwords) if tcfg.stopwords else topics.TokenRules()
    narratives = [r.narrative for r in records if r.narrative]
    docs = [topics.tokenize(t, rules) for t in narratives]
    corpus = topics.build_corpus(docs, tcfg.min_df, tcfg.max_df_fraction, tcfg.max_vocab)
    lda_cfg = topics.LdaConfig(K=tcfg.K, alpha=tcfg.alpha, beta=tcfg.beta, sweeps=tcfg.sweeps, seed=seed)
    model = topics.fit_lda_chains(corpus, lda_cfg, tcfg.chains)
    share = model.token_share()
    return {
        "narratives": len(narratives),
        "documents": len(corpus.documents),
        "tokens": corpus.n_tokens,
        "vocabulary": len(corpus.vocabulary),
        "K": lda_cfg.K,
        "alpha": lda_cfg.alpha,
        "beta": lda_cfg.beta,
        "sweeps": lda_cfg.sweeps,
        "log_likelihood": model.log_likelihood,
        "perplexity": topics.perplexity(model, corpus),
        "topics": [
            {
                "id": k,
                "label": f"Topic {k}",
                "share": float(share[k]),
                "top_words": [[w, p] for w, p in topics.top_words(model, k, tcfg.top_n)],
            }
            for k in range(model.K)
        ],
    }


def _stage(name, fn, *args, **kw):
    try:
        return fn(*args, **kw)
    except PipelineError:
        raise
    except ComplaintInsightError as exc:
        raise PipelineError(name, exc) from exc


def build_report(cfg: PipelineConfig):
    """Run every stage in memory. Returns (report, artifacts)."""
    schema = _stage("ingest", resolve_schema, cfg)
    records, summary = _stage("ingest", load_records, cfg.input, schema)
    if not records:
        raise PipelineError("ingest", IngestError(f"{cfg.input}: no records"))
    train_idx, test_idx = _stage("split", F.train_test_split, len(records), cfg.split_ratio, cfg.seed)
    train_recs = [records[i] for i in train_idx]
    test_recs = [records[i] for i in test_idx]
    report = RunReport(
        config=cfg.to_dict(),
        dataset=summary.to_dict(),
        split={"seed": cfg.seed, "ratio": cfg.split_ratio, "train": len(train_idx), "test": len(test_idx)},
    )
    artifacts = []
    for task, tcfg in ((F.TIMELY, cfg.timely), (F.RESPONSE, cfg.response)):
        if tcfg.enabled and tcfg.models:
            section = _stage(task.name, _run_task, task, tcfg, train_recs, test_recs, cfg,
                             report.timings, artifacts)
            setattr(report, task.name, section)
    if cfg.topics.enabled:
        start = time.perf_counter()
        report.topics = _stage("topics", run_topics, records, cfg.topics, cfg.seed)
        report.timings["topics"] = time.perf_counter() - start
    return report, artifacts


def report_json(report: RunReport, include_timings: bool = False) -> str:
    return json.dumps(report.to_dict(include_timings), indent=2, ensure_ascii=False) + "\n"


def write_outputs(report: RunReport, artifacts, out_dir) -> dict:
    """Write artifacts and reports; removes everything written if any write
    fails."""
    from .report import render_report

    out = Path(out_dir)
    written = []
    try:
        (out / "models").mkdir(parents=True, exist_ok=True)
        paths = {}
        for a in artifacts:
            p = out / "models" / f"{a.task}-{a.kind}.cim"
            save_model(a, p)
            written.append(p)
            paths[f"{a.task}.{a.kind}"] = str(p)
        files = {
            "report.json": report_json(report),
            "report.txt": render_report(report, "text").decode("utf-8"),
            "timings.json": json.dumps(report.timings, indent=2, sort_keys=True) + "\n",
        }
        for name, text in files.items():
            p = out / name
            p.write_text(text, encoding="utf-8")
            written.append(p)
            paths[name] = str(p)
        return paths
    except BaseException:
        for p in written:
            p.unlink(missing_ok=True)
        raise


def run_pipeline(cfg: PipelineConfig, write: bool = True) -> RunReport:
    cfg.validate()
    report, artifacts = build_report(cfg)
    if write:
        write_outputs(report, artifacts, cfg.output_dir)
    return report
