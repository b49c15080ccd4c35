"""Text and machine-readable rendering of run reports."""
from __future__ import annotations

from .pipeline import MODEL_LABELS, RunReport, report_json


def _fmt(v, digits=2):
    return "n/a" if v is None else f"{v:.{digits}f}"


def _time(report, key):
    t = report.timings.get(key)
    return "n/a" if t is None else f"{t:.2f} s"


def _table(rows, header):
    widths = [max(len(str(r[i])) for r in [header] + rows) for i in range(len(header))]
    line = lambda r: "  ".join(str(c).ljust(w) if i == 0 else str(c).rjust(w)
                               for i, (c, w) in enumerate(zip(r, widths)))
    return [line(header)] + [line(r) for r in rows]


def _confusion(cm: dict, title: str):
    names = cm["class_names"]
    short = [str(i) for i in range(len(names))]
    out = [title + "  (rows = true class, columns = predicted)"]
    rows = [[f"{i} {n}"] + [str(c) for c in cells] for i, (n, cells) in enumerate(zip(names, cm["cells"]))]
    out += _table(rows, ["true \\ pred"] + short)
    return out


def _importance(section: dict):
    out = []
    for kind, imp in section.get("feature_importance", {}).items():
        parts = ", ".join(f"{k} {v:.3f}" for k, v in imp.items())
        out.append(f"  {MODEL_LABELS.get(kind, kind)}: {parts}")
    return ["Feature importance"] + out if out else []


def _binary_section(report: RunReport):
    sec = report.timely
    kinds = list(sec["models"])
    labels = [MODEL_LABELS.get(k, k) for k in kinds]
    ms = [sec["models"][k] or {} for k in kinds]
    rows = [
        ["Precision"] + [_fmt(m.get("precision")) for m in ms],
        ["Recall"] + [_fmt(m.get("recall")) for m in ms],
        ["AUC"] + [_fmt(m.get("auc")) for m in ms],
        ["Computing Time"] + [_time(report, f"timely.{k}") for k in kinds],
    ]
    out = [
        "Comparison of Models for Binary Classification",
        f"(timely response; precision/recall for positive class \"{sec['positive_class']}\", "
        f"threshold {sec['threshold']})",
    ]
    out += _table(rows, ["Metric"] + labels)
    for k, m in zip(kinds, ms):
        if m.get("confusion_matrix"):
            out.append("")
            out += _confusion(m["confusion_matrix"], f"Confusion matrix: {MODEL_LABELS.get(k, k)}")
    imp = _importance(sec)
    if imp:
        out += [""] + imp
    return out


def _multiclass_section(report: RunReport):
    sec = report.response
    kinds = list(sec["models"])
    labels = [MODEL_LABELS.get(k, k) for k in kinds]
    header = ["Class"]
    for lab in labels:
        header += [f"{lab} Precision", f"{lab} Recall"]
    rows = []
    for name in sec["class_names"]:
        row = [name]
        for k in kinds:
            pc = sec["models"][k]["per_class"][name]
            row += [_fmt(pc["precision"]), _fmt(pc["recall"])]
        rows.append(row)
    timing = ["Computing Time"]
    for k in kinds:
        timing += [_time(report, f"response.{k}"), ""]
    rows.append(timing)
    out = ["Comparison of Models for Multiclass Classification", "(company response, one-vs-rest per class)"]
    out += _table(rows, header)
    for k in kinds:
        out.append("")
        out += _confusion(sec["models"][k]["confusion_matrix"], f"Confusion matrix: {MODEL_LABELS.get(k, k)}")
    imp = _importance(sec)
    if imp:
        out += [""] + imp
    return out


def _topics_section(report: RunReport):
    t = report.topics
    out = [
        "LDA Topics",
        f"({t['documents']} documents, {t['tokens']} tokens, vocabulary {t['vocabulary']}, "
        f"K={t['K']}, {t['sweeps']} sweeps, perplexity {t['perplexity']:.1f})",
    ]
    for topic in t["topics"]:
        words = ", ".join(w for w, _ in topic["top_words"])
        out.append(f"{topic['label']} ({100 * topic['share']:.1f}% of tokens): {words}")
    return out


def render_text(report: RunReport) -> str:
    ds = report.dataset
    card = ", ".join(f"{k} {v}" for k, v in ds["cardinality"].items())
    lines = [
        "Consumer complaint analytics: run report",
        "",
        f"Dataset: {ds['row_count']} records, {ds['row_errors']} rejected rows, "
        f"received {ds['date_range'][0]} .. {ds['date_range'][1]}",
        f"Distinct values: {card}",
        f"Split: {report.split['train']} train / {report.split['test']} test "
        f"(ratio {report.split['ratio']}, seed {report.split['seed']})",
    ]
    for present, section in ((report.timely, _binary_section), (report.response, _multiclass_section),
                             (report.topics, _topics_section)):
        if present is not None:
            lines += [""] + section(report)
    return "\n".join(lines) + "\n"


def render_report(report: RunReport, format: str = "text") -> bytes:
    if format == "text":
        return render_text(report).encode("utf-8")
    if format == "machine":
        return report_json(report).encode("utf-8")
    raise ValueError(f"unknown report format {format!r}")
