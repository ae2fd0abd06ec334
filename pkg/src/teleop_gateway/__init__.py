"""Multimodal teleoperation gateway for a mobile bimanual manipulator.

Fuses smartphone head orientation, foot-pedal base navigation, and
leader-arm joint streams into a unified 30 Hz command loop, drives a
built-in kinematic simulator, and serves split-screen VR video feedback to
a browser client.
"""

__version__ = "0.1.0"

from .angles import clamp, wrap180
from .model import (
    ArmJointVector,
    BaseVelocity,
    HeadCommand,
    ModalityStatus,
    OrientationSample,
    PedalState,
    UnifiedCommand,
)

__all__ = [
    "__version__",
    "wrap180",
    "clamp",
    "OrientationSample",
    "HeadCommand",
    "PedalState",
    "BaseVelocity",
    "ArmJointVector",
    "UnifiedCommand",
    "ModalityStatus",
]
