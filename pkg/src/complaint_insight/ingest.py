"""Parsing, validation and streaming of CFPB-format complaint records."""
from __future__ import annotations

import csv
import datetime as dt
import enum
import io
import json
from collections import Counter
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import IO, Iterable, Iterator, Mapping, Optional, Union

import yaml

from .errors import (
    BadCategory,
    BadDate,
    HeaderMismatch,
    IngestError,
    IngestIoError,
    MissingField,
    SchemaError,
)

REQUIRED_FIELDS = (
    "complaint_id",
    "company",
    "product",
    "issue",
    "state",
    "date_received",
    "date_sent",
    "timely_response",
    "company_response",
)
OPTIONAL_FIELDS = ("narrative",)
CANONICAL_FIELDS = REQUIRED_FIELDS + OPTIONAL_FIELDS
CATEGORICAL_FIELDS = ("company", "product", "issue", "state")
TARGET_FIELDS = ("timely_response", "company_response")


class CompanyResponse(enum.Enum):
    CLOSED_WITH_EXPLANATION = "Closed with explanation"
    CLOSED_WITH_NON_MONETARY_RELIEF = "Closed with non-monetary relief"
    IN_PROGRESS = "In progress"
    CLOSED_WITH_MONETARY_RELIEF = "Closed with monetary relief"
    CLOSED_WITHOUT_RELIEF = "Closed without relief"
    CLOSED = "Closed"
    UNTIMELY_RESPONSE = "Untimely response"
    CLOSED_WITH_RELIEF = "Closed with relief"

    @classmethod
    def parse(cls, text: str) -> "CompanyResponse":
        key = text.strip().casefold()
        for member in cls:
            if member.value.casefold() == key:
                return member
        raise BadCategory(f"unknown company response {text!r}")


RESPONSE_CATEGORIES = tuple(m.value for m in CompanyResponse)


class Timely(enum.Enum):
    YES = "Yes"
    NO = "No"

    @classmethod
    def parse(cls, text: str) -> "Timely":
        key = text.strip().casefold()
        if key == "yes":
            return cls.YES
        if key == "no":
            return cls.NO
        raise BadCategory(f"unknown timely-response value {text!r}")


@dataclass(frozen=True)
class SchemaSpec:
    column_map: Mapping[str, str]
    format: str = "csv"
    strict: bool = False
    targets_optional: bool = False

    def __post_init__(self):
        if self.format not in ("csv", "json-lines"):
            raise SchemaError(f"unsupported format {self.format!r}")
        unknown = set(self.column_map) - set(CANONICAL_FIELDS)
        if unknown:
            raise SchemaError(f"unknown canonical fields: {sorted(unknown)}")
        missing = [f for f in REQUIRED_FIELDS if f not in self.column_map]
        if missing:
            raise SchemaError(f"schema lacks required fields: {missing}")
        headers = list(self.column_map.values())
        if len(set(headers)) != len(headers):
            raise SchemaError("two canonical fields map to the same source column")

    @classmethod
    def from_mapping(cls, doc: Mapping) -> "SchemaSpec":
        return cls(
            column_map=dict(doc["columns"]),
            format=doc.get("format", "csv"),
            strict=bool(doc.get("strict", False)),
        )

    @classmethod
    def load(cls, path: Union[str, Path]) -> "SchemaSpec":
        with open(path, encoding="utf-8") as fh:
            return cls.from_mapping(yaml.safe_load(fh))

    @classmethod
    def default(cls, format: str = "csv", strict: bool = False) -> "SchemaSpec":
        text = resources.files("complaint_insight.data").joinpath("default_schema.yaml").read_text("utf-8")
        base = cls.from_mapping(yaml.safe_load(text))
        column_map = base.column_map
        if format == "json-lines":
            # no header row to remap: keys are the canonical names themselves
            column_map = {name: name for name in base.column_map}
        return cls(column_map=column_map, format=format, strict=strict)

    def with_options(self, *, format: Optional[str] = None, strict: Optional[bool] = None,
                     targets_optional: Optional[bool] = None) -> "SchemaSpec":
        fmt = format or self.format
        column_map = self.column_map
        if fmt == "json-lines" and self.format != "json-lines":
            column_map = {name: name for name in self.column_map}
        return SchemaSpec(
            column_map,
            fmt,
            self.strict if strict is None else strict,
            self.targets_optional if targets_optional is None else targets_optional,
        )

    def is_required(self, name: str) -> bool:
        if name in TARGET_FIELDS:
            return not self.targets_optional
        return name in REQUIRED_FIELDS


@dataclass(frozen=True, slots=True)
class ComplaintRecord:
    complaint_id: str
    company: Optional[str]
    product: Optional[str]
    issue: Optional[str]
    state: Optional[str]
    date_received: dt.date
    date_sent: Optional[dt.date]
    narrative: str
    timely_response: Optional[Timely]
    company_response: Optional[CompanyResponse]

    @property
    def dates_consistent(self) -> bool:
        return self.date_sent is None or self.date_sent >= self.date_received


@dataclass(frozen=True)
class RowError:
    """A malformed row, yielded in-stream by lenient readers."""

    line: int
    kind: str
    message: str


def _parse_date(text: str, column: str) -> dt.date:
    s = text.strip()
    # accept a trailing time component ("2024-04-01T12:00:00") from JSON exports
    if len(s) > 10 and s[10] in "T ":
        s = s[:10]
    try:
        if len(s) != 10:
            raise ValueError
        return dt.date.fromisoformat(s)
    except ValueError:
        raise BadDate(f"{column}: unparseable date {text!r}") from None


def _blank(value) -> Optional[str]:
    if value is None:
        return None
    s = str(value).strip()
    return s or None


def parse_record(raw_row: Mapping[str, object], schema: SchemaSpec) -> ComplaintRecord:
    """Map one raw row (source header -> text) onto a ``ComplaintRecord``.

    Empty strings become missing values. Raises ``MissingField``, ``BadDate``
    or ``BadCategory``.
    """
    values = {}
    for name in CANONICAL_FIELDS:
        column = schema.column_map.get(name)
        if column is None or column not in raw_row:
            if schema.is_required(name):
                raise MissingField(f"required column {column or name!r} absent")
            values[name] = None
            continue
        values[name] = _blank(raw_row[column])

    if values["complaint_id"] is None:
        raise MissingField("empty complaint id")
    if values["date_received"] is None:
        raise BadDate("date_received: empty")
    received = _parse_date(values["date_received"], "date_received")
    sent = _parse_date(values["date_sent"], "date_sent") if values["date_sent"] else None
    timely = Timely.parse(values["timely_response"]) if values["timely_response"] else None
    response = CompanyResponse.parse(values["company_response"]) if values["company_response"] else None

    return ComplaintRecord(
        complaint_id=values["complaint_id"],
        company=values["company"],
        product=values["product"],
        issue=values["issue"],
        state=values["state"],
        date_received=received,
        date_sent=sent,
        narrative=values["narrative"] or "",
        timely_response=timely,
        company_response=response,
    )


def record_to_row(record: ComplaintRecord, schema: SchemaSpec) -> dict:
    """Inverse of ``parse_record``: source-column -> text."""
    canon = {
        "complaint_id": record.complaint_id,
        "company": record.company or "",
        "product": record.product or "",
        "issue": record.issue or "",
        "state": record.state or "",
        "date_received": record.date_received.isoformat(),
        "date_sent": record.date_sent.isoformat() if record.date_sent else "",
        "narrative": record.narrative,
        "timely_response": record.timely_response.value if record.timely_response else "",
        "company_response": record.company_response.value if record.company_response else "",
    }
    return {schema.column_map[k]: v for k, v in canon.items() if k in schema.column_map}


def csv_header(schema: SchemaSpec) -> list:
    return [schema.column_map[k] for k in CANONICAL_FIELDS if k in schema.column_map]


class RecordStream:
    """Lazy iterator over ``ComplaintRecord`` (and ``RowError`` when lenient).

    Counters ``n_records`` and ``n_errors`` are updated as the stream is
    consumed. In strict mode the first bad row raises.
    """

    def __init__(self, source: IO[bytes], schema: SchemaSpec):
        self.source = source
        self.schema = schema
        self.n_records = 0
        self.n_errors = 0
        self._iter = self._generate()

    def __iter__(self):
        return self

    def __next__(self):
        return next(self._iter)

    def _rows(self) -> Iterator[tuple]:
        text = io.TextIOWrapper(self.source, encoding="utf-8", newline="")
        try:
            if self.schema.format == "csv":
                reader = csv.DictReader(text)
                header = reader.fieldnames or []
                if header:
                    absent = [
                        self.schema.column_map[f]
                        for f in REQUIRED_FIELDS
                        if self.schema.is_required(f) and self.schema.column_map[f] not in header
                    ]
                    if absent:
                        raise HeaderMismatch(f"declared columns absent from header: {absent}")
                for row in reader:
                    if None in row:
                        yield reader.line_num, IngestError("row has more fields than header")
                        continue
                    yield reader.line_num, row
            else:
                for lineno, line in enumerate(text, start=1):
                    if not line.strip():
                        continue
                    try:
                        obj = json.loads(line)
                    except json.JSONDecodeError as exc:
                        yield lineno, IngestError(f"invalid JSON: {exc.msg}")
                        continue
                    if not isinstance(obj, dict):
                        yield lineno, IngestError("JSON line is not an object")
                        continue
                    yield lineno, obj
        except (OSError, UnicodeDecodeError) as exc:
            raise IngestIoError(str(exc)) from exc
        finally:
            text.detach()

    def _generate(self):
        for lineno, row in self._rows():
            try:
                if isinstance(row, Exception):
                    raise row
                rec = parse_record(row, self.schema)
            except IngestError as exc:
                if self.schema.strict:
                    raise type(exc)(f"line {lineno}: {exc}") from exc
                self.n_errors += 1
                yield RowError(lineno, type(exc).__name__, str(exc))
                continue
            self.n_records += 1
            yield rec


def stream_records(source: IO[bytes], schema: SchemaSpec) -> RecordStream:
    return RecordStream(source, schema)


def open_records(path: Union[str, Path], schema: Optional[SchemaSpec] = None):
    """Context-managed stream over a file; format guessed from the suffix
    when no schema is given."""
    path = Path(path)
    if schema is None:
        fmt = "json-lines" if path.suffix in (".jsonl", ".ndjson", ".json") else "csv"
        schema = SchemaSpec.default(format=fmt)
    try:
        fh = open(path, "rb")
    except OSError as exc:
        raise IngestIoError(f"{path}: {exc.strerror}") from exc
    return _ClosingStream(fh, schema)


class _ClosingStream(RecordStream):
    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.source.close()
        return False


_MISSING_TRACKED = CATEGORICAL_FIELDS + ("date_sent", "narrative", "timely_response", "company_response")


@dataclass
class DatasetSummary:
    row_count: int = 0
    row_errors: int = 0
    missing: Counter = field(default_factory=Counter)
    values: dict = field(default_factory=lambda: {f: Counter() for f in CATEGORICAL_FIELDS})
    timely_counts: Counter = field(default_factory=Counter)
    response_counts: Counter = field(default_factory=Counter)
    date_min: Optional[dt.date] = None
    date_max: Optional[dt.date] = None
    date_order_violations: int = 0
    narratives: int = 0

    @property
    def cardinality(self) -> dict:
        return {f: len(c) for f, c in self.values.items()}

    @property
    def timely_missing(self) -> int:
        return self.missing["timely_response"]

    @property
    def response_missing(self) -> int:
        return self.missing["company_response"]

    def add(self, rec: ComplaintRecord) -> None:
        self.row_count += 1
        for f in CATEGORICAL_FIELDS:
            v = getattr(rec, f)
            if v is None:
                self.missing[f] += 1
            else:
                self.values[f][v] += 1
        if rec.date_sent is None:
            self.missing["date_sent"] += 1
        elif rec.date_sent < rec.date_received:
            self.date_order_violations += 1
        if rec.narrative:
            self.narratives += 1
        else:
            self.missing["narrative"] += 1
        if rec.timely_response is None:
            self.missing["timely_response"] += 1
        else:
            self.timely_counts[rec.timely_response.value] += 1
        if rec.company_response is None:
            self.missing["company_response"] += 1
        else:
            self.response_counts[rec.company_response.value] += 1
        d = rec.date_received
        if self.date_min is None or d < self.date_min:
            self.date_min = d
        if self.date_max is None or d > self.date_max:
            self.date_max = d

    def merge(self, other: "DatasetSummary") -> "DatasetSummary":
        out = DatasetSummary()
        out.row_count = self.row_count + other.row_count
        out.row_errors = self.row_errors + other.row_errors
        out.missing = self.missing + other.missing
        out.values = {f: self.values[f] + other.values[f] for f in CATEGORICAL_FIELDS}
        out.timely_counts = self.timely_counts + other.timely_counts
        out.response_counts = self.response_counts + other.response_counts
        dates = [d for d in (self.date_min, other.date_min) if d is not None]
        out.date_min = min(dates) if dates else None
        dates = [d for d in (self.date_max, other.date_max) if d is not None]
        out.date_max = max(dates) if dates else None
        out.date_order_violations = self.date_order_violations + other.date_order_violations
        out.narratives = self.narratives + other.narratives
        return out

    def to_dict(self) -> dict:
        return {
            "row_count": self.row_count,
            "row_errors": self.row_errors,
            "missing": {k: self.missing[k] for k in _MISSING_TRACKED},
            "cardinality": self.cardinality,
            "timely_counts": {k: self.timely_counts[k] for k in ("Yes", "No")},
            "response_counts": {k: self.response_counts[k] for k in RESPONSE_CATEGORIES},
            "date_range": [
                self.date_min.isoformat() if self.date_min else None,
                self.date_max.isoformat() if self.date_max else None,
            ],
            "date_order_violations": self.date_order_violations,
            "narratives": self.narratives,
        }


def summarize(records: Iterable[Union[ComplaintRecord, RowError]]) -> DatasetSummary:
    """Single-pass exact counts. ``RowError`` items count toward
    ``row_errors`` only."""
    summary = DatasetSummary()
    for item in records:
        if isinstance(item, RowError):
            summary.row_errors += 1
        else:
            summary.add(item)
    return summary
