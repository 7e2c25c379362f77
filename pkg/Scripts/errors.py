"""
Error hierarchy shared by every module of the toolkit.

Each error knows which module raised it and which process exit code the
command line maps it to (2 = bad input, 3 = I/O failure).
"""

from __future__ import annotations

from typing import Optional


class ToolkitError(Exception):
    module = "toolkit"
    exit_code = 2

    def __init__(self, message: str, module: Optional[str] = None):
        super().__init__(message)
        if module is not None:
            self.module = module


class IoFailure(ToolkitError):
    exit_code = 3


class DimensionMismatch(ToolkitError):
    module = "features"


class ConfigMismatch(ToolkitError):
    module = "classify"


# ingest
class IngestError(ToolkitError):
    module = "ingest"


class EmptyDataset(IngestError):
    pass


class ClassTooSmall(IngestError):
    pass


class UnreadableImage(IngestError):
    pass


class UnsupportedFormat(IngestError):
    pass


class CorruptFile(IngestError):
    pass


class ZeroDimension(IngestError):
    pass


# preprocess / features
class EmptyPlane(ToolkitError):
    module = "preprocess"


class FeatureError(ToolkitError):
    module = "features"


class EmptySignal(FeatureError):
    pass


class InvalidK(FeatureError):
    pass


class KTooLarge(InvalidK):
    pass


class BadMask(FeatureError):
    pass


# classify
class ClassifyError(ToolkitError):
    module = "classify"


class DegenerateCovariance(ClassifyError):
    pass


class DuplicateLabel(ClassifyError):
    pass


class IndexOutOfRange(ClassifyError):
    pass


class MissingChannel(ClassifyError):
    pass


class ModelFormatError(ClassifyError):
    pass


class VersionMismatch(ModelFormatError):
    pass


class ChecksumMismatch(ModelFormatError):
    pass


# baselines
class TooFewClasses(ToolkitError):
    module = "baselines"


# eval
class EvalError(ToolkitError):
    module = "eval"


class EmptyMatrix(EvalError):
    pass


class NoImpostors(EvalError):
    pass


# cli
class ConfigError(ToolkitError):
    module = "cli"
