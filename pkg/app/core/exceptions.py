from typing import Sequence


class AirCompError(Exception):
    """Base class for all simulator errors."""


class ScenarioError(AirCompError):
    """Scenario file could not be parsed or violates an invariant."""

    def __init__(self, errors: Sequence[tuple[str, str]], source: str = "scenario") -> None:
        # args must stay (errors, source); Celery rebuilds task errors from them
        self.errors = [(str(field), str(message)) for field, message in errors]
        self.source = source
        super().__init__(self.errors, source)

    def __str__(self) -> str:
        details = "; ".join(f"{field}: {message}" for field, message in self.errors)
        return f"Invalid {self.source}: {details}"


class InvariantViolation(AirCompError, ValueError):
    """Arguments outside an operation's domain."""


class DecodeError(AirCompError):
    """Received symbol cannot be decoded (zero power-scaling factor)."""


class IdxFormatError(AirCompError):
    """Malformed or inconsistent IDX file."""


class DatasetUnavailableError(AirCompError):
    """Dataset files are missing and cannot be fetched."""


class TrainingDivergedError(AirCompError):
    """Local training produced a non-finite loss."""
