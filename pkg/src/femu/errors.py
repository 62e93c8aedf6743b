"""Error types shared across the emulator.

Every raisable error carries a stable ``code`` string that the control
protocol echoes back to clients. Validation helpers collect
:class:`ValidationIssue` records instead of raising one error at a time.
"""

from __future__ import annotations

from dataclasses import dataclass


class FemuError(Exception):
    """Base class; ``code`` is the stable identifier used on the wire."""

    code = "InternalError"

    def __init__(self, message: str = ""):
        super().__init__(message or self.code)
        self.message = message or self.code


@dataclass(frozen=True)
class ValidationIssue:
    code: str
    field: str
    message: str

    def __str__(self) -> str:
        return f"{self.code} at {self.field}: {self.message}"


class ModelValidationError(FemuError):
    code = "ModelValidation"

    def __init__(self, issues):
        self.issues = tuple(issues)
        super().__init__("; ".join(str(i) for i in self.issues))


class DomainIdCollision(FemuError):
    code = "DomainIdCollision"


class ShapeMismatch(FemuError):
    code = "ShapeMismatch"


class UnknownKernel(FemuError):
    code = "UnknownKernel"


class UnknownTarget(FemuError):
    code = "UnknownTarget"


class UnbalancedMarkers(FemuError):
    code = "UnbalancedMarkers"


class ProgramFinished(FemuError):
    code = "ProgramFinished"


class CounterOverflow(FemuError):
    code = "CounterOverflow"


class Underrun(FemuError):
    code = "Underrun"


class SourceExhausted(FemuError):
    code = "SourceExhausted"


class EmptySource(FemuError):
    code = "EmptySource"


class InvalidRate(FemuError):
    code = "InvalidRate"


class OutOfRange(FemuError):
    code = "OutOfRange"


class DuplicateName(FemuError):
    code = "DuplicateName"


class IncompleteRtlSpec(FemuError):
    code = "IncompleteRtlSpec"


class MailboxBusy(FemuError):
    code = "MailboxBusy"


class MailboxProtocolError(FemuError):
    code = "MailboxProtocolError"


class UnsupportedKernel(FemuError):
    code = "UnsupportedKernel"


class AcceleratorError(FemuError):
    code = "AcceleratorError"


class NoMarkersPresent(FemuError):
    code = "NoMarkersPresent"


class ModelMismatch(FemuError):
    code = "ModelMismatch"


class ConservationViolation(FemuError):
    code = "ConservationViolation"


class UnknownCommand(FemuError):
    code = "UnknownCommand"


class BadArguments(FemuError):
    code = "BadArguments"


class InvalidState(FemuError):
    code = "InvalidState"


class AssertionFailed(FemuError):
    code = "AssertionFailed"


class MissingInput(FemuError):
    code = "MissingInput"
