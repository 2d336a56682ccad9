"""Exception hierarchy.

Every error carries the CLI exit code it maps to and, where known, a
``line``/``column`` position in the offending source.
"""

from __future__ import annotations


class FtaqError(Exception):
    exit_code = 4

    def __init__(self, message: str, line: int | None = None, column: int | None = None,
                 origin: str | None = None):
        super().__init__(message)
        self.message = message
        self.line = line
        self.column = column
        self.origin = origin

    def where(self) -> str:
        if self.line is None:
            return ""
        origin = f"{self.origin}:" if self.origin else ""
        return f"{origin}{self.line}:{self.column}"

    def __str__(self) -> str:
        where = self.where()
        return f"{where}: {self.message}" if where else self.message


class ModelSyntaxError(FtaqError):
    """Lexical or grammatical problem in a ``.ftat`` source."""

    exit_code = 1


class ModelValidationError(FtaqError):
    exit_code = 2

    def __init__(self, report, message: str | None = None, model=None, **kwargs):
        self.report = report
        self.model = model
        if message is None:
            first = report[0]
            message = f"invalid model: {first.rule} at {first.node} ({len(report)} violation(s))"
        super().__init__(message, **kwargs)


class ScriptSyntaxError(FtaqError):
    exit_code = 1


class DesugarError(FtaqError):
    """A script parsed but cannot be translated against the given model."""

    exit_code = 1


class UnknownElementError(FtaqError, LookupError):
    exit_code = 1

    def __init__(self, element: str, **kwargs):
        self.element = element
        super().__init__(f"unknown element {element!r}", **kwargs)


class FormulaError(FtaqError):
    """Formula is ill-formed for the engine it was handed to."""


class EvaluationError(FtaqError):
    exit_code = 4


class MissingAttributeError(EvaluationError):
    def __init__(self, element: str, attr: str, **kwargs):
        self.element = element
        self.attr = attr
        super().__init__(f"attribute missing {element}.{attr}", **kwargs)


class NullConditioningError(EvaluationError):
    def __init__(self, condition: str = "", **kwargs):
        super().__init__(f"conditioning-on-null: Pr({condition}) = 0", **kwargs)


class GuardExceededError(EvaluationError):
    def __init__(self, count: int, limit: int, **kwargs):
        self.count = count
        self.limit = limit
        super().__init__(
            f"exhaustive guard exceeded: {count} leaves > limit {limit} "
            f"(raise --max-leaves or FTAQ_MAX_LEAVES)", **kwargs)
