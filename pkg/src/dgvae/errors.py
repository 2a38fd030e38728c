"""Exception types shared across the package."""


class ConfigurationError(ValueError):
    """A required configuration entry is missing or inconsistent."""


class ValidationError(ValueError):
    """Inputs violate a documented precondition."""


class OverlayParseError(ValueError):
    """An annotation file does not follow the documented grammar."""


class TrainingDiverged(RuntimeError):
    """Training hit a non-finite loss; carries the last good checkpoint path."""

    def __init__(self, message, checkpoint_path=None):
        super().__init__(message)
        self.checkpoint_path = checkpoint_path
