"""Shared domain types for the teleoperation gateway.

All angles are degrees, all timestamps are monotonic milliseconds from
process start (never wall clock), base velocities are m/s and rad/s in the
robot body frame (+x forward, +y left, +omega counterclockwise from above).
"""

from __future__ import annotations

from dataclasses import dataclass

SIDE_LEFT = "left"
SIDE_RIGHT = "right"

SAFETY_NOMINAL = "nominal"
SAFETY_BASE_HALTED = "base_halted"
SAFETY_FROZEN = "frozen"

MODALITY_HEAD = "head"
MODALITY_PEDALS = "pedals"
MODALITY_LEFT_LEADER = "left_leader"
MODALITY_RIGHT_LEADER = "right_leader"
MODALITY_CLIENT = "client"

ALL_MODALITIES = (
    MODALITY_HEAD,
    MODALITY_PEDALS,
    MODALITY_LEFT_LEADER,
    MODALITY_RIGHT_LEADER,
    MODALITY_CLIENT,
)

NUM_ARM_JOINTS = 5


@dataclass(frozen=True)
class OrientationSample:
    """One raw phone attitude report, angles already wrapped to (-180, 180]."""

    roll: float
    pitch: float
    yaw: float
    timestamp_ms: float
    seq: int


@dataclass(frozen=True)
class CalibrationReference:
    """The attitude captured as the operator's zero head pose."""

    roll0: float
    pitch0: float
    yaw0: float
    established_at_ms: float


@dataclass(frozen=True)
class HeadCommand:
    """Calibrated 2-DOF head target, both axes clamped to +/-90 degrees."""

    yaw: float
    roll: float

    def __post_init__(self):
        if not (-90.0 <= self.yaw <= 90.0 and -90.0 <= self.roll <= 90.0):
            raise ValueError(f"head command out of +/-90 range: {self}")


ZERO_HEAD = HeadCommand(yaw=0.0, roll=0.0)


@dataclass(frozen=True)
class PedalState:
    """Debounced pedal levels; every one of the 16 combinations is representable."""

    forward: bool = False
    backward: bool = False
    left: bool = False
    right: bool = False
    timestamp_ms: float = 0.0


@dataclass(frozen=True)
class BaseVelocity:
    """Body-frame base velocity command."""

    vx: float = 0.0
    vy: float = 0.0
    omega: float = 0.0


ZERO_VELOCITY = BaseVelocity()


@dataclass(frozen=True)
class ArmJointVector:
    """Five joint angles (degrees) plus a normalized gripper opening."""

    side: str
    joints: tuple[float, ...]
    gripper: float = 0.0

    def __post_init__(self):
        if self.side not in (SIDE_LEFT, SIDE_RIGHT):
            raise ValueError(f"unknown arm side {self.side!r}")
        if len(self.joints) != NUM_ARM_JOINTS:
            raise ValueError(f"expected {NUM_ARM_JOINTS} joints, got {len(self.joints)}")
        if not (0.0 <= self.gripper <= 1.0):
            raise ValueError(f"gripper must be in [0, 1], got {self.gripper}")


def zero_arm(side: str) -> ArmJointVector:
    return ArmJointVector(side=side, joints=(0.0,) * NUM_ARM_JOINTS, gripper=0.0)


@dataclass(frozen=True)
class UnifiedCommand:
    """The fused per-tick command emitted by the control loop."""

    tick: int
    timestamp_ms: float
    base: BaseVelocity
    head: HeadCommand
    left_arm: ArmJointVector
    right_arm: ArmJointVector
    safety: str = SAFETY_NOMINAL


def initial_command() -> UnifiedCommand:
    """Tick-zero predecessor used to seed the control loop."""
    return UnifiedCommand(
        tick=0,
        timestamp_ms=0.0,
        base=ZERO_VELOCITY,
        head=ZERO_HEAD,
        left_arm=zero_arm(SIDE_LEFT),
        right_arm=zero_arm(SIDE_RIGHT),
        safety=SAFETY_NOMINAL,
    )


@dataclass(frozen=True)
class ModalityStatus:
    """Connection/staleness snapshot for one input modality."""

    modality: str
    connected: bool
    last_seen_ms: float | None
    stale: bool
