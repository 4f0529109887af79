"""Exception types shared across the package."""


class VoxsynthError(Exception):
    """Base class for all package errors."""


class ParseError(VoxsynthError):
    """Malformed file header. Carries the byte offset of the first bad field."""

    def __init__(self, message, offset):
        super().__init__(f"{message} (at byte offset {offset})")
        self.offset = offset


class TruncationError(VoxsynthError):
    """Payload length does not match the header's dims/dtype."""


class ValidationError(VoxsynthError):
    """Data violates a type invariant (NaN payload, out-of-range value, bad table row)."""


class DomainError(VoxsynthError):
    """Argument outside the operation's domain."""


class ShapeError(VoxsynthError):
    """Operands have mismatched dims or spacing."""


class EmptyContourError(VoxsynthError):
    """Body contour extraction found no foreground on any slice."""


class PlacementError(VoxsynthError):
    """Phantom organ placement failed after bounded retries."""


class DegenerateError(VoxsynthError):
    """Statistic undefined for this input (e.g. zero-variance histogram)."""


class DivergenceError(VoxsynthError):
    """Non-finite value during training or sampling. Carries the step index."""

    def __init__(self, message, step):
        super().__init__(f"{message} (step {step})")
        self.step = step
