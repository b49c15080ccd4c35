"""Versioned, checksummed single-file model artifacts.

Layout::

    CIMODEL <version>\\n
    {"length": <payload bytes>, "sha256": "<hex>"}\\n
    <zlib-compressed JSON payload>
"""
from __future__ import annotations

import hashlib
import json
import zlib
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ArtifactIoError, Corrupt, VersionUnsupported
from .features import FrequencyEncoder
from .learn import DecisionTreeModel, GbtModel, LinearModel, RandomForestModel

MAGIC = b"CIMODEL"
FORMAT_VERSION = 1

MODEL_TYPES = {
    "decision_tree": DecisionTreeModel,
    "random_forest": RandomForestModel,
    "gbt": GbtModel,
    "logistic": LinearModel,
    "svm": LinearModel,
}


@dataclass
class ModelArtifact:
    task: str
    kind: str
    model: object
    encoders: dict
    class_names: tuple
    metadata: dict = field(default_factory=dict)
    format_version: int = FORMAT_VERSION

    def payload(self) -> dict:
        return {
            "task": self.task,
            "kind": self.kind,
            "model": self.model.to_dict(),
            "encoders": {k: v.to_dict() for k, v in self.encoders.items()},
            "class_names": list(self.class_names),
            "metadata": self.metadata,
        }

    @classmethod
    def from_payload(cls, doc: dict, version: int) -> "ModelArtifact":
        kind = doc["kind"]
        if kind not in MODEL_TYPES:
            raise Corrupt(f"unknown model kind {kind!r}")
        return cls(
            task=doc["task"],
            kind=kind,
            model=MODEL_TYPES[kind].from_dict(doc["model"]),
            encoders={k: FrequencyEncoder.from_dict(v) for k, v in doc["encoders"].items()},
            class_names=tuple(doc["class_names"]),
            metadata=dict(doc["metadata"]),
            format_version=version,
        )


def save_model(artifact: ModelArtifact, path) -> Path:
    path = Path(path)
    body = zlib.compress(json.dumps(artifact.payload(), separators=(",", ":")).encode("utf-8"), 6)
    header = json.dumps({"length": len(body), "sha256": hashlib.sha256(body).hexdigest()})
    try:
        with open(path, "wb") as fh:
            fh.write(MAGIC + b" " + str(artifact.format_version).encode() + b"\n")
            fh.write(header.encode("ascii") + b"\n")
            fh.write(body)
    except OSError as exc:
        raise ArtifactIoError(f"{path}: {exc.strerror}") from exc
    return path


def load_model(path) -> ModelArtifact:
    try:
        with open(path, "rb") as fh:
            raw = fh.read()
    except OSError as exc:
        raise ArtifactIoError(f"{path}: {exc.strerror}") from exc

    first, sep, rest = raw.partition(b"\n")
    parts = first.split(b" ")
    if not sep or len(parts) != 2 or parts[0] != MAGIC or not parts[1].isdigit():
        raise Corrupt(f"{path}: not a model artifact")
    version = int(parts[1])
    if version != FORMAT_VERSION:
        raise VersionUnsupported(f"{path}: artifact version {version}, this build reads {FORMAT_VERSION}")
    header_line, sep, body = rest.partition(b"\n")
    try:
        header = json.loads(header_line)
        length, digest = int(header["length"]), header["sha256"]
    except (ValueError, KeyError, TypeError):
        raise Corrupt(f"{path}: damaged header") from None
    if not sep or len(body) != length or hashlib.sha256(body).hexdigest() != digest:
        raise Corrupt(f"{path}: checksum mismatch (truncated or modified)")
    try:
        doc = json.loads(zlib.decompress(body))
        return ModelArtifact.from_payload(doc, version)
    except (zlib.error, ValueError, KeyError, TypeError) as exc:
        raise Corrupt(f"{path}: undecodable payload ({exc})") from None
