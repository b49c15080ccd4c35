"""Pipeline configuration: one declarative YAML document, CLI flags override
scalars."""
from __future__ import annotations

import dataclasses
import datetime as dt
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import yaml

from .errors import ConfigError
from .learn import ForestConfig, GbtConfig, LogisticConfig, SvmConfig, TreeConfig

BINARY_MODELS = ("gbt", "logistic", "svm")
MULTICLASS_MODELS = ("random_forest", "decision_tree")
RESAMPLING = ("none", "oversample", "median")


@dataclass
class TaskConfig:
    enabled: bool = True
    models: list = field(default_factory=list)
    resampling: str = "none"
    threshold: float = 0.5


@dataclass
class TopicsConfig:
    enabled: bool = True
    K: int = 10
    alpha: Optional[float] = None
    beta: float = 0.01
    sweeps: int = 200
    min_df: int = 5
    max_df_fraction: float = 0.5
    max_vocab: int = 50_000
    top_n: int = 10
    chains: int = 1
    stopwords: Optional[str] = None


@dataclass
class ModelsConfig:
    decision_tree: TreeConfig = field(default_factory=TreeConfig)
    random_forest: ForestConfig = field(default_factory=ForestConfig)
    gbt: GbtConfig = field(default_factory=GbtConfig)
    logistic: LogisticConfig = field(default_factory=LogisticConfig)
    svm: SvmConfig = field(default_factory=SvmConfig)


@dataclass
class PipelineConfig:
    input: Optional[str] = None
    schema: Optional[str] = None
    format: Optional[str] = None
    strict: bool = False
    seed: int = 0
    split_ratio: float = 0.7
    date_origin: str = "2011-01-01"
    output_dir: str = "out"
    timely: TaskConfig = field(default_factory=lambda: TaskConfig(True, list(BINARY_MODELS), "oversample"))
    response: TaskConfig = field(default_factory=lambda: TaskConfig(True, list(MULTICLASS_MODELS), "median"))
    models: ModelsConfig = field(default_factory=ModelsConfig)
    topics: TopicsConfig = field(default_factory=TopicsConfig)

    @property
    def origin(self) -> dt.date:
        return dt.date.fromisoformat(self.date_origin)

    def validate(self, check_paths: bool = True) -> "PipelineConfig":
        if not 0.0 < self.split_ratio < 1.0:
            raise ConfigError(f"split_ratio must lie in (0, 1), got {self.split_ratio}")
        try:
            self.origin
        except ValueError:
            raise ConfigError(f"bad date_origin {self.date_origin!r}") from None
        for name, task, allowed in (("timely", self.timely, BINARY_MODELS),
                                    ("response", self.response, MULTICLASS_MODELS)):
            bad = [m for m in task.models if m not in allowed]
            if bad:
                raise ConfigError(f"{name}: unsupported models {bad}; choose from {allowed}")
            if task.resampling not in RESAMPLING:
                raise ConfigError(f"{name}: resampling must be one of {RESAMPLING}")
            if not 0.0 < task.threshold < 1.0:
                raise ConfigError(f"{name}: threshold must lie in (0, 1)")
        if self.format not in (None, "csv", "json-lines"):
            raise ConfigError(f"unknown input format {self.format!r}")
        if check_paths:
            for label, p in (("input", self.input), ("schema", self.schema), ("stopwords", self.topics.stopwords)):
                if p is not None and not Path(p).exists():
                    raise ConfigError(f"{label} path not found: {p}")
            if self.input is None:
                raise ConfigError("no input path configured")
        return self

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, doc: Optional[dict]) -> "PipelineConfig":
        try:
            return _build(cls, doc or {}, "")
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc)) from None

    @classmethod
    def load(cls, path) -> "PipelineConfig":
        try:
            with open(path, encoding="utf-8") as fh:
                doc = yaml.safe_load(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
        except yaml.YAMLError as exc:
            raise ConfigError(f"invalid YAML in {path}: {exc}") from None
        if doc is not None and not isinstance(doc, dict):
            raise ConfigError("config must be a mapping")
        return cls.from_dict(doc)


def _build(cls, doc, where):
    if not isinstance(doc, dict):
        raise ConfigError(f"{where or 'config'}: expected a mapping")
    fields = {f.name: f for f in dataclasses.fields(cls)}
    unknown = set(doc) - set(fields)
    if unknown:
        raise ConfigError(f"{where or 'config'}: unknown keys {sorted(unknown)}")
    kwargs = {}
    defaults = cls()
    for name, value in doc.items():
        current = getattr(defaults, name)
        if dataclasses.is_dataclass(current):
            kwargs[name] = _build(type(current), value or {}, f"{where}{name}.")
        else:
            kwargs[name] = value
    return cls(**kwargs)
