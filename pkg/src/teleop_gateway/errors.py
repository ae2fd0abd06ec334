"""Exception types shared across the gateway."""


class TeleopError(Exception):
    """Base class for every error raised by this package."""


class InvalidAngleError(TeleopError, ValueError):
    """Angle input is not a finite number."""


class InvalidRangeError(TeleopError, ValueError):
    """A [lo, hi] range was given with lo > hi."""


class MalformedMessageError(TeleopError, ValueError):
    """An orientation message failed schema validation."""


class FramingError(TeleopError, ValueError):
    """A byte frame has the wrong header or size."""


class CorruptFrameError(TeleopError, ValueError):
    """A byte frame failed its checksum or carries an invalid field."""


class InvalidPairingError(TeleopError, ValueError):
    """Two arm vectors for different sides were combined."""


class DegenerateGeometryError(TeleopError, ValueError):
    """Base geometry does not yield an invertible kinematic matrix."""


class InvalidStepError(TeleopError, ValueError):
    """Simulation step size outside (0, 0.1] seconds."""


class InvalidFrameError(TeleopError, ValueError):
    """Video frame has zero dimensions or an inconsistent buffer."""


class InvalidScriptError(TeleopError, ValueError):
    """Scripted input events are not time-ordered or are malformed."""


class ReplayError(TeleopError, ValueError):
    """An episode file could not be replayed."""

    def __init__(self, line_no: int, message: str):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


class StartupError(TeleopError, RuntimeError):
    """The service could not start with the given configuration."""
