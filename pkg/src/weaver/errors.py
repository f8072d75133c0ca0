"""Typed errors shared across the engine; each maps to one stable API code."""

from __future__ import annotations


class WeaverError(Exception):
    """Base engine error carrying a stable machine code and optional field path."""

    code = "internal_error"
    http_status = 400

    def __init__(self, message: str, field: str | None = None):
        super().__init__(message)
        self.message = message
        self.field = field

    def to_json(self) -> dict:
        body = {"code": self.code, "message": self.message}
        if self.field:
            body["field"] = self.field
        return body


class DataError(WeaverError):
    code = "invalid_dataset"


class PlanError(WeaverError):
    code = "invalid_plan"


class SpecError(WeaverError):
    code = "invalid_spec"


class CalloutError(WeaverError):
    code = "illegal_callout"


class EmptySelectionError(WeaverError):
    """A well-formed callout that selected no rows; a typed outcome, not a crash."""

    code = "empty_selection"


class FactError(WeaverError):
    code = "invalid_fact_request"


class StaleFactsError(WeaverError):
    code = "facts_stale"
    http_status = 409


class NotFoundError(WeaverError):
    code = "not_found"
    http_status = 404

    def __init__(self, message: str, code: str = "not_found", field: str | None = None):
        super().__init__(message, field)
        self.code = code


class GeneratorError(WeaverError):
    """Text-generation backend failure; keeps the prompt so the caller can retry."""

    code = "generator_failed"
    http_status = 502

    def __init__(self, message: str, prompt=None):
        super().__init__(message)
        self.prompt = prompt


class RecommendError(WeaverError):
    code = "recommend_failed"
    http_status = 502


class StoryVersionError(WeaverError):
    code = "unsupported_version"
