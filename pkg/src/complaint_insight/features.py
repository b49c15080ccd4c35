"""Frequency encoding, feature matrices, train/test split and resampling."""
from __future__ import annotations

import datetime as dt
import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping, Optional, Sequence

import numpy as np

from .errors import BadRatio, EncoderMissing
from .ingest import RESPONSE_CATEGORIES, ComplaintRecord

MISSING = "__MISSING__"
DEFAULT_DATE_ORIGIN = dt.date(2011, 1, 1)


@dataclass(frozen=True)
class FrequencyEncoder:
    """Category label -> relative frequency in the fitting data."""

    table: Mapping[str, float]
    fitted_on: int

    def encode(self, label: Optional[str]) -> float:
        return self.table.get(MISSING if label is None else label, 0.0)

    def encode_many(self, labels: Iterable[Optional[str]]) -> np.ndarray:
        get = self.table.get
        return np.array([get(MISSING if v is None else v, 0.0) for v in labels], dtype=np.float64)

    def to_dict(self) -> dict:
        return {"fitted_on": self.fitted_on, "table": dict(self.table)}

    @classmethod
    def from_dict(cls, doc: Mapping) -> "FrequencyEncoder":
        return cls(table=dict(doc["table"]), fitted_on=int(doc["fitted_on"]))


def fit_frequency_encoder(values: Iterable[Optional[str]]) -> FrequencyEncoder:
    counts = Counter(MISSING if v is None else v for v in values)
    total = sum(counts.values())
    # sorted keys keep serialization stable regardless of input order
    table = {k: counts[k] / total for k in sorted(counts)}
    return FrequencyEncoder(table=table, fitted_on=total)


def encode(encoder: FrequencyEncoder, label: Optional[str]) -> float:
    return encoder.encode(label)


def _timely_target(rec: ComplaintRecord) -> Optional[int]:
    if rec.timely_response is None:
        return None
    return 1 if rec.timely_response.value == "Yes" else 0


_RESPONSE_IDS = {name: i for i, name in enumerate(RESPONSE_CATEGORIES)}


def _response_target(rec: ComplaintRecord) -> Optional[int]:
    if rec.company_response is None:
        return None
    return _RESPONSE_IDS[rec.company_response.value]


@dataclass(frozen=True)
class TaskSpec:
    name: str
    features: tuple
    class_names: tuple
    target: Callable[[ComplaintRecord], Optional[int]] = field(repr=False, compare=False)
    version: int = 1

    @property
    def categorical(self) -> tuple:
        return tuple(f for f in self.features if f != "date_sent")

    @property
    def width(self) -> int:
        return len(self.features)


TIMELY = TaskSpec(
    name="timely",
    features=("company", "product", "issue", "state", "date_sent"),
    class_names=("No", "Yes"),
    target=_timely_target,
)
RESPONSE = TaskSpec(
    name="response",
    features=("company", "product", "issue"),
    class_names=RESPONSE_CATEGORIES,
    target=_response_target,
)
TASKS = {TIMELY.name: TIMELY, RESPONSE.name: RESPONSE}


@dataclass
class EncodedDataset:
    matrix: np.ndarray
    labels: np.ndarray
    class_names: tuple
    task: TaskSpec
    dropped: int = 0

    def __len__(self) -> int:
        return self.matrix.shape[0]

    @property
    def n_classes(self) -> int:
        return len(self.class_names)

    def subset(self, idx) -> "EncodedDataset":
        idx = np.asarray(idx, dtype=np.intp)
        return EncodedDataset(self.matrix[idx], self.labels[idx], self.class_names, self.task)


def fit_encoders(records: Sequence[ComplaintRecord], task: TaskSpec) -> dict:
    return {f: fit_frequency_encoder(getattr(r, f) for r in records) for f in task.categorical}


def days_since(date: dt.date, origin: dt.date) -> int:
    return (date - origin).days


def encode_record(rec: ComplaintRecord, task: TaskSpec, encoders: Mapping[str, FrequencyEncoder],
                  date_origin: dt.date = DEFAULT_DATE_ORIGIN) -> list:
    row = []
    for f in task.features:
        if f == "date_sent":
            # missing send date falls back to the receive date
            d = rec.date_sent or rec.date_received
            row.append(float(days_since(d, date_origin)))
        else:
            row.append(encoders[f].encode(getattr(rec, f)))
    return row


def build_features(records: Iterable[ComplaintRecord], task: TaskSpec,
                   encoders: Mapping[str, FrequencyEncoder],
                   date_origin: dt.date = DEFAULT_DATE_ORIGIN) -> EncodedDataset:
    """Encode records into a dense matrix for ``task``.

    Rows whose target is missing are dropped and counted in ``dropped``.
    """
    absent = [f for f in task.categorical if f not in encoders]
    if absent:
        raise EncoderMissing(f"no encoder for {absent}")
    rows, labels = [], []
    dropped = 0
    for rec in records:
        y = task.target(rec)
        if y is None:
            dropped += 1
            continue
        rows.append(encode_record(rec, task, encoders, date_origin))
        labels.append(y)
    matrix = np.array(rows, dtype=np.float64).reshape(len(rows), task.width)
    return EncodedDataset(matrix, np.array(labels, dtype=np.int64), task.class_names, task, dropped)


def train_test_split(n_rows: int, ratio: float = 0.7, seed: int = 0):
    if not 0.0 < ratio < 1.0:
        raise BadRatio(f"ratio must lie in (0, 1), got {ratio}")
    perm = np.random.default_rng(seed).permutation(n_rows)
    n_train = math.floor(ratio * n_rows)
    return np.sort(perm[:n_train]), np.sort(perm[n_train:])


def _class_indices(labels: np.ndarray) -> dict:
    labels = np.asarray(labels)
    return {int(c): np.flatnonzero(labels == c) for c in np.unique(labels)}


def oversample(labels, seed: int = 0, target: Optional[int] = None) -> np.ndarray:
    """Indices with every class raised to ``target`` rows (default: the
    largest class count). All original indices are kept; extras are drawn
    uniformly with replacement from the same class."""
    groups = _class_indices(labels)
    if not groups:
        return np.empty(0, dtype=np.intp)
    if target is None:
        target = max(len(g) for g in groups.values())
    rng = np.random.default_rng(seed)
    parts = [np.arange(len(labels), dtype=np.intp)]
    for c in sorted(groups):
        g = groups[c]
        if len(g) < target:
            parts.append(rng.choice(g, size=target - len(g), replace=True))
    return np.concatenate(parts).astype(np.intp)


def undersample(labels, cap: int, seed: int = 0) -> np.ndarray:
    if cap < 1:
        raise ValueError("cap must be >= 1")
    rng = np.random.default_rng(seed)
    keep = []
    groups = _class_indices(labels)
    for c in sorted(groups):
        g = groups[c]
        keep.append(rng.choice(g, size=cap, replace=False) if len(g) > cap else g)
    if not keep:
        return np.empty(0, dtype=np.intp)
    return np.sort(np.concatenate(keep)).astype(np.intp)


def rebalance_to_median(labels, seed: int = 0) -> np.ndarray:
    """Undersample classes above the median class count, then oversample
    those below it up to the median."""
    labels = np.asarray(labels)
    counts = np.bincount(labels) if len(labels) else np.empty(0, dtype=int)
    present = counts[counts > 0]
    if len(present) == 0:
        return np.empty(0, dtype=np.intp)
    level = max(1, int(np.floor(np.median(present))))
    kept = undersample(labels, level, seed)
    over = oversample(labels[kept], seed + 1, target=level)
    return kept[over]


def resample(labels, method: str, seed: int = 0) -> np.ndarray:
    if method == "none":
        return np.arange(len(labels), dtype=np.intp)
    if method == "oversample":
        return oversample(labels, seed)
    if method == "median":
        return rebalance_to_median(labels, seed)
    raise ValueError(f"unknown resampling method {method!r}")
