"""Leader-arm ingest: wire frames, leader-to-follower mapping, rate limiting.

Leader frames are 14 bytes: 0x5A header, side byte (0=left, 1=right), five
little-endian signed 16-bit joint angles in centidegrees, one unsigned byte
gripper opening (0-255 maps to [0, 1]), and an XOR checksum over all
preceding bytes.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

from .angles import clamp
from .errors import CorruptFrameError, FramingError, InvalidPairingError
from .framing import FrameStreamDecoder, xor_checksum
from .model import NUM_ARM_JOINTS, SIDE_LEFT, SIDE_RIGHT, ArmJointVector

LEADER_FRAME_HEADER = 0x5A
LEADER_FRAME_LEN = 14

_SIDE_BYTES = {0: SIDE_LEFT, 1: SIDE_RIGHT}
_SIDE_CODES = {SIDE_LEFT: 0, SIDE_RIGHT: 1}

# Centidegree fixed point bounds of the wire format.
_JOINT_WIRE_MIN = -327.68
_JOINT_WIRE_MAX = 327.67

# A full gripper stroke is treated as 90 degrees of equivalent joint travel
# when rate limiting.
GRIPPER_TRAVEL_DEG = 90.0

DEFAULT_JOINT_LIMITS = ((-180.0, 180.0),) * NUM_ARM_JOINTS


@dataclass(frozen=True)
class ArmCalibration:
    """Per-joint sign/offset/limit mapping from leader to follower.

    Exists to absorb any convention mismatch between the leader device and
    the follower arm; the identity calibration passes joints through
    untouched inside generous symmetric limits.
    """

    offsets: tuple[float, ...] = (0.0,) * NUM_ARM_JOINTS
    signs: tuple[int, ...] = (1,) * NUM_ARM_JOINTS
    limits: tuple[tuple[float, float], ...] = DEFAULT_JOINT_LIMITS

    def __post_init__(self):
        if len(self.offsets) != NUM_ARM_JOINTS or len(self.signs) != NUM_ARM_JOINTS:
            raise ValueError("calibration must cover all joints")
        if len(self.limits) != NUM_ARM_JOINTS:
            raise ValueError("calibration must limit all joints")
        if any(s not in (1, -1) for s in self.signs):
            raise ValueError("signs must be +1 or -1")
        if any(lo >= hi for lo, hi in self.limits):
            raise ValueError("every joint limit needs min < max")


IDENTITY_CALIBRATION = ArmCalibration()


def encode_leader_frame(v: ArmJointVector) -> bytes:
    """Build the wire frame for a leader joint vector."""
    for j in v.joints:
        if not (_JOINT_WIRE_MIN <= j <= _JOINT_WIRE_MAX):
            raise FramingError(f"joint {j} outside wire range +/-327.67 deg")
    body = bytearray([LEADER_FRAME_HEADER, _SIDE_CODES[v.side]])
    body += struct.pack("<5h", *(round(j * 100.0) for j in v.joints))
    body.append(round(v.gripper * 255.0))
    body.append(xor_checksum(bytes(body)))
    return bytes(body)


def decode_leader_frame(frame: bytes) -> ArmJointVector:
    """Decode one exact frame; see LeaderStreamDecoder for byte streams."""
    if len(frame) != LEADER_FRAME_LEN:
        raise FramingError(f"expected {LEADER_FRAME_LEN} bytes, got {len(frame)}")
    if frame[0] != LEADER_FRAME_HEADER:
        raise FramingError(f"bad header 0x{frame[0]:02X}")
    if xor_checksum(frame[:-1]) != frame[-1]:
        raise CorruptFrameError("checksum mismatch")
    side = _SIDE_BYTES.get(frame[1])
    if side is None:
        raise CorruptFrameError(f"unknown side byte 0x{frame[1]:02X}")
    centideg = struct.unpack("<5h", frame[2:12])
    return ArmJointVector(
        side=side,
        joints=tuple(c / 100.0 for c in centideg),
        gripper=frame[12] / 255.0,
    )


class LeaderStreamDecoder:
    """Resynchronizing decoder for a leader-arm byte stream."""

    def __init__(self):
        self._stream = FrameStreamDecoder(
            LEADER_FRAME_HEADER, LEADER_FRAME_LEN, valid=lambda f: f[1] in _SIDE_BYTES
        )

    def feed(self, data: bytes) -> list[ArmJointVector]:
        return [decode_leader_frame(frame) for frame in self._stream.feed(data)]

    @property
    def frames_corrupt(self) -> int:
        return self._stream.frames_corrupt

    @property
    def frames_dropped(self) -> int:
        return self._stream.frames_corrupt


def map_leader_to_follower(leader: ArmJointVector, cal: ArmCalibration) -> ArmJointVector:
    """Apply per-joint sign/offset then clamp into the follower's limits."""
    joints = tuple(
        clamp(cal.signs[i] * leader.joints[i] + cal.offsets[i], *cal.limits[i])
        for i in range(NUM_ARM_JOINTS)
    )
    return ArmJointVector(side=leader.side, joints=joints, gripper=clamp(leader.gripper, 0.0, 1.0))


def rate_limit(previous: ArmJointVector, target: ArmJointVector, max_step_deg: float) -> ArmJointVector:
    """Move each joint toward the target by at most max_step_deg.

    Bounds the follower's speed when a leader reconnects far from the last
    pose, so the arm glides to the new target instead of jumping.
    """
    if previous.side != target.side:
        raise InvalidPairingError(f"cannot pair {previous.side} with {target.side}")
    if max_step_deg <= 0.0:
        raise ValueError("max_step_deg must be positive")
    joints = tuple(
        p + clamp(t - p, -max_step_deg, max_step_deg)
        for p, t in zip(previous.joints, target.joints)
    )
    grip_step = max_step_deg / GRIPPER_TRAVEL_DEG
    gripper = previous.gripper + clamp(target.gripper - previous.gripper, -grip_step, grip_step)
    return ArmJointVector(side=target.side, joints=joints, gripper=clamp(gripper, 0.0, 1.0))
