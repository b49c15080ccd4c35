"""Exception hierarchy shared by every stage of the pipeline."""


class ComplaintInsightError(Exception):
    """Base class for all package errors."""

    stage = "internal"


# -- ingest ---------------------------------------------------------------

class IngestError(ComplaintInsightError):
    stage = "ingest"


class MissingField(IngestError):
    pass


class BadDate(IngestError):
    pass


class BadCategory(IngestError):
    pass


class HeaderMismatch(IngestError):
    pass


class IngestIoError(IngestError):
    pass


class SchemaError(IngestError):
    pass


# -- features -------------------------------------------------------------

class FeatureError(ComplaintInsightError):
    stage = "features"


class EncoderMissing(FeatureError):
    pass


class BadRatio(FeatureError, ValueError):
    pass


# -- learn ----------------------------------------------------------------

class LearnError(ComplaintInsightError):
    stage = "learn"


class EmptyNode(LearnError, ValueError):
    pass


class EmptyDataset(LearnError, ValueError):
    pass


class NotBinary(LearnError, ValueError):
    pass


class WidthMismatch(LearnError, ValueError):
    pass


# -- metrics --------------------------------------------------------------

class MetricsError(ComplaintInsightError, ValueError):
    stage = "metrics"


class LengthMismatch(MetricsError):
    pass


class IdOutOfRange(MetricsError):
    pass


class OneClassOnly(MetricsError):
    pass


# -- topics ---------------------------------------------------------------

class TopicsError(ComplaintInsightError):
    stage = "topics"


class EmptyCorpus(TopicsError, ValueError):
    pass


class BadTopic(TopicsError, ValueError):
    pass


# -- app ------------------------------------------------------------------

class ConfigError(ComplaintInsightError):
    stage = "config"


class ArtifactError(ComplaintInsightError):
    stage = "artifact"


class ArtifactIoError(ArtifactError):
    pass


class VersionUnsupported(ArtifactError):
    pass


class Corrupt(ArtifactError):
    pass


class TaskMismatch(ArtifactError):
    pass


class PipelineError(ComplaintInsightError):
    """Wraps a module error with the pipeline stage it came from."""

    def __init__(self, stage, cause):
        super().__init__(f"[{stage}] {type(cause).__name__}: {cause}")
        self.stage = stage
        self.cause = cause
