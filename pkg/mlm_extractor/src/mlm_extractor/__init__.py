"""Sidecar for extracting layered MLM embeddings into MPEB archives and
serving them over HTTP. Carries zero analysis logic; the probing side
consumes only the archive and wire formats."""

from .config import ExtractorConfig
from .errors import ExtractorError, ManifestError, ModelUnavailable

__all__ = ["ExtractorConfig", "ExtractorError", "ManifestError",
           "ModelUnavailable"]
