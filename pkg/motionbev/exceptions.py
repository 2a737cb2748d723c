"""
Custom exceptions for motionbev.

Every error raised on purpose by the package derives from MotionBevError so
callers (and the CLI) can catch one type. Structured errors keep the context
needed for debugging (operation, expected/actual shapes, record names, frames).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional


class MotionBevError(Exception):
    """Base exception for all motionbev errors."""

    def __init__(self, message: str = "A motionbev error occurred.") -> None:
        self.message = message
        super().__init__(message)

    def __str__(self) -> str:
        return self.message


class ValidationError(MotionBevError):
    """Raised when user input or configuration fails validation."""

    def __init__(self, message: str = "Input validation failed.") -> None:
        super().__init__(message)


class NonFiniteError(ValidationError):
    """Raised when NaN or Inf values reach an ingestion boundary."""

    def __init__(self, message: str = "Input contains NaN or Inf values.") -> None:
        super().__init__(message)


class GradientMissingError(MotionBevError):
    """Raised when an optimizer step finds a parameter without a gradient."""

    def __init__(self, name: str) -> None:
        self.name = name
        super().__init__(f"Parameter '{name}' has no gradient; run backward() first.")


class ParseError(MotionBevError):
    """Raised when a text artifact cannot be parsed into the expected format."""

    def __init__(self, message: str = "Failed to parse motionbev text artifact.") -> None:
        super().__init__(message)


class SceneGenerationError(MotionBevError):
    """Raised when a synthetic scene specification cannot be realised."""

    def __init__(self, message: str = "Synthetic scene could not be generated.") -> None:
        super().__init__(message)


@dataclass(frozen=True)
class ShapeError(MotionBevError):
    """
    Raised when tensor shapes are incompatible with an operation.

    Fields:
        op: Operation name (e.g., "conv2d").
        expected: Description of the expected shape.
        got: The offending shape(s).
        message: Optional extra detail.
    """

    op: str = "unknown"
    expected: str = ""
    got: str = ""
    message: str = "Incompatible tensor shapes."

    def __post_init__(self) -> None:
        Exception.__init__(self, self.__str__())

    def __str__(self) -> str:
        parts = [f"{self.op}: {self.message}"]
        if self.expected:
            parts.append(f"expected {self.expected}")
        if self.got:
            parts.append(f"got {self.got}")
        return "; ".join(parts)


@dataclass(frozen=True)
class CheckpointError(MotionBevError):
    """
    Raised when a binary tensor file is corrupt, truncated or does not match a model.

    Fields:
        path: File path if known.
        record: Name of the offending record if known.
        message: Human-readable description.
    """

    path: Optional[str] = None
    record: Optional[str] = None
    message: str = "Checkpoint could not be read."

    def __post_init__(self) -> None:
        Exception.__init__(self, self.__str__())

    def __str__(self) -> str:
        parts: list[str] = []
        if self.path:
            parts.append(f"path={self.path}")
        if self.record:
            parts.append(f"record={self.record}")
        prefix = " ".join(parts)
        if prefix:
            return f"Checkpoint error ({prefix}): {self.message}"
        return f"Checkpoint error: {self.message}"


@dataclass(frozen=True)
class DatasetError(MotionBevError):
    """
    Raised when a dataset directory has missing or corrupt records.

    Fields:
        path: Dataset or blob path.
        frame: Frame identifier ("scene/frame") if known.
        field: Offending field or record name if known.
        message: Human-readable description.
    """

    path: Optional[str] = None
    frame: Optional[str] = None
    field: Optional[str] = None
    message: str = "Dataset could not be read."

    def __post_init__(self) -> None:
        Exception.__init__(self, self.__str__())

    def __str__(self) -> str:
        parts: list[str] = []
        if self.frame:
            parts.append(f"frame={self.frame}")
        if self.field:
            parts.append(f"field={self.field}")
        if self.path:
            parts.append(f"path={self.path}")
        prefix = " ".join(parts)
        if prefix:
            return f"Dataset error ({prefix}): {self.message}"
        return f"Dataset error: {self.message}"


@dataclass(frozen=True)
class TrainingDivergedError(MotionBevError):
    """Raised when the training loss becomes NaN or Inf."""

    iteration: int = -1
    dump_path: Optional[str] = None
    message: str = "Training loss is not finite."

    def __post_init__(self) -> None:
        Exception.__init__(self, self.__str__())

    def __str__(self) -> str:
        text = f"Training diverged at iteration {self.iteration}: {self.message}"
        if self.dump_path:
            text += f" (batch dump written to {self.dump_path})"
        return text


@dataclass(frozen=True)
class OutputError(MotionBevError):
    """Raised when an output artifact (image, table, checkpoint) cannot be written."""

    path: Optional[str] = None
    message: str = "Output could not be written."

    def __post_init__(self) -> None:
        Exception.__init__(self, self.__str__())

    def __str__(self) -> str:
        if self.path:
            return f"Output error (path={self.path}): {self.message}"
        return f"Output error: {self.message}"
