"""Exception types shared across the package."""


class InvalidInputError(ValueError):
    """Raised when an operation receives arguments violating its contract."""


class PlacementError(RuntimeError):
    """Raised when the scene generator cannot place a person without overlap."""


class SceneLoadError(ValueError):
    """Raised when a scene file is missing or a field fails validation."""


class PipelineStageError(RuntimeError):
    """Wraps an error raised inside a pipeline stage, tagged with the stage name."""

    def __init__(self, stage: str, cause: Exception):
        super().__init__(f"pipeline stage '{stage}' failed: {cause}")
        self.stage = stage
        self.cause = cause
