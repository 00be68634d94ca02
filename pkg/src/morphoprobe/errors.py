"""Exception hierarchy.

Everything raised deliberately by the toolkit derives from MorphoprobeError
so the CLI can map failures to exit codes (data/usage errors exit 2,
argparse-level usage errors exit 1, everything else is a bug).
"""

from __future__ import annotations


class MorphoprobeError(Exception):
    """Base class for all deliberate toolkit errors."""


class ParseError(MorphoprobeError):
    """Malformed CoNLL-U input; message carries the 1-based line number."""


class EncodingError(MorphoprobeError):
    """Input bytes are not valid UTF-8."""


class ConfigError(MorphoprobeError):
    """Inconsistent or invalid configuration."""


class DataError(MorphoprobeError):
    """A dataset or result file violates its contract."""


class NotFoundError(MorphoprobeError):
    """Archive lookup miss; message carries the hex request id."""


class IntegrityError(MorphoprobeError):
    """Backend content disagrees with the model registry (dim/model_id)."""


class TransportError(MorphoprobeError):
    """HTTP backend failure with retry metadata."""

    def __init__(self, message: str, status: int | None = None,
                 retry_after: float | None = None, attempts: int = 1):
        super().__init__(message)
        self.status = status
        self.retry_after = retry_after
        self.attempts = attempts


class DegenerateTaskError(MorphoprobeError):
    """Attribution undefined: unmasked and all-masked accuracies coincide."""


class TrainingDiverged(MorphoprobeError):
    """Non-finite loss or gradient during training."""
