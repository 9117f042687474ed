"""Shared exception types."""


class ShapeMismatchError(ValueError):
    """Tensor shape incompatible with the layer or graph that received it."""


class DivergedError(RuntimeError):
    """Training produced non-finite values."""


class ModelFormatError(ValueError):
    """Weight-file violation; .reason is one of bad-magic / version-mismatch /
    truncated / shape-mismatch."""

    def __init__(self, reason: str, detail: str = ""):
        self.reason = reason
        super().__init__(f"{reason}: {detail}" if detail else reason)


class ConfigError(ValueError):
    """Invalid experiment configuration."""


class MissingArtifactError(FileNotFoundError):
    """A referenced model/weight file does not exist."""
