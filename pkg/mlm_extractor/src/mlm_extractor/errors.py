class ExtractorError(Exception):
    """Base for all sidecar failures."""


class ManifestError(ExtractorError):
    """Manifest file malformed, ids inconsistent, or wrong model."""


class ModelUnavailable(ExtractorError):
    """Model weights or tokenizer could not be loaded."""
