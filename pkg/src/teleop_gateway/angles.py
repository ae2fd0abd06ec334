"""Degree arithmetic used at every module boundary.

Angles are degrees everywhere outside of kinematics math; radians never
cross a module boundary.
"""

import math

from .errors import InvalidAngleError, InvalidRangeError


def wrap180(angle: float) -> float:
    """Wrap an angle into (-180, +180], preserving it modulo 360."""
    if not math.isfinite(angle):
        raise InvalidAngleError(f"angle must be finite, got {angle!r}")
    wrapped = math.fmod(angle, 360.0)
    if wrapped > 180.0:
        wrapped -= 360.0
    elif wrapped <= -180.0:
        wrapped += 360.0
    return wrapped


def clamp(value: float, lo: float, hi: float) -> float:
    """Clamp value into [lo, hi]."""
    if lo > hi:
        raise InvalidRangeError(f"empty range: lo={lo} > hi={hi}")
    return min(hi, max(lo, value))
