"""Exception vocabulary shared across the pipeline.

Every error raised by this package derives from :class:`StyleDistillError`
so the CLI can map failures to stable exit codes.
"""

from __future__ import annotations


class StyleDistillError(Exception):
    """Base class for all package errors."""

    exit_code = 1


class ConfigError(StyleDistillError):
    exit_code = 2


# --- prompt rendering -------------------------------------------------------

class EmptySource(StyleDistillError):
    exit_code = 2


class EmptyGoldTarget(StyleDistillError):
    exit_code = 2


class TemplateKindMismatch(StyleDistillError):
    exit_code = 2


class FileMissing(StyleDistillError):
    exit_code = 3


class SchemaViolation(StyleDistillError):
    def __init__(self, message: str, line: int | None = None):
        super().__init__(message)
        self.line = line

    exit_code = 4


class MarkerInExemplar(StyleDistillError):
    exit_code = 4


# --- generation backend -----------------------------------------------------

class BackendError(StyleDistillError):
    exit_code = 5


class TransientBackendError(BackendError):
    """Transport or 5xx-class failure; eligible for retry."""


class BackendUnavailable(BackendError):
    """Raised after the retry budget is exhausted."""


class AuthMissing(BackendError):
    exit_code = 2


class ReplayMiss(BackendError):
    def __init__(self, message: str, digest: str | None = None):
        super().__init__(message)
        self.digest = digest

    exit_code = 6


class DuplicateDigest(StyleDistillError):
    exit_code = 4


class IoFailure(StyleDistillError):
    exit_code = 3


# --- dataset building -------------------------------------------------------

class AllRecordsFiltered(StyleDistillError):
    exit_code = 4


class MissingGoldTarget(StyleDistillError):
    def __init__(self, source_id: str):
        super().__init__(f"no gold target for source_id {source_id!r}")
        self.source_id = source_id

    exit_code = 4


class SampleTooLarge(StyleDistillError):
    exit_code = 2


class UnescapableField(StyleDistillError):
    exit_code = 4


# --- scoring ----------------------------------------------------------------

class LengthMismatch(StyleDistillError):
    def __init__(self, hyp_len: int, ref_len: int):
        super().__init__(f"hypothesis/reference line counts differ: {hyp_len} vs {ref_len}")
        self.hyp_len = hyp_len
        self.ref_len = ref_len

    exit_code = 4


class EmptyCorpus(StyleDistillError):
    exit_code = 2


class EmptyReference(StyleDistillError):
    exit_code = 2


class NoCandidates(StyleDistillError):
    exit_code = 2


class SignatureMismatch(StyleDistillError):
    exit_code = 4


# --- annotation service -----------------------------------------------------

class DuplicateItemId(StyleDistillError):
    exit_code = 4


class EmptyItemList(StyleDistillError):
    exit_code = 2


class UnknownSession(StyleDistillError):
    exit_code = 3


class UnknownItem(StyleDistillError):
    exit_code = 3


class AlreadyRated(StyleDistillError):
    exit_code = 4


class InvalidRate(StyleDistillError):
    exit_code = 2


class NoRatings(StyleDistillError):
    exit_code = 2


# --- pipeline ---------------------------------------------------------------

class PipelineStageError(StyleDistillError):
    """Wraps the first failing stage so callers see where a run stopped."""

    def __init__(self, stage: str, cause: Exception):
        super().__init__(f"stage {stage!r} failed: {cause}")
        self.stage = stage
        self.cause = cause

    @property
    def exit_code(self) -> int:  # type: ignore[override]
        return getattr(self.cause, "exit_code", 1)
