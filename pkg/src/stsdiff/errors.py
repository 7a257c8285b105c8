"""Shared control-flow exceptions for the stepping machinery."""


class StepFailure(RuntimeError):
    """A single step attempt produced unusable values; the driver should
    reject the attempt and retry with a smaller h."""


class StageCountError(ValueError):
    """The requested step would need more internal stages than the cap."""


class IntegrationAbort(RuntimeError):
    """The adaptive driver cannot continue (repeated rejections or
    solution blow-up)."""
