"""Smartphone head control: orientation ingest, calibration, normalization.

The phone streams raw attitude records; on connect the first sample becomes
the zero reference, and every later sample is turned into a head command as
the clamped, seam-safe difference from that reference. Recalibration simply
re-captures the reference from the next sample.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

from .angles import clamp, wrap180
from .errors import MalformedMessageError
from .model import CalibrationReference, HeadCommand, OrientationSample

PHONE_YAW = "phone_yaw"
PHONE_ROLL = "phone_roll"
PHONE_PITCH = "phone_pitch"


@dataclass(frozen=True)
class HeadControlConfig:
    """Phone-axis to head-axis mapping.

    The default maps phone yaw to head yaw and phone roll to head roll;
    which physical axis should drive head roll depends on how the phone
    sits in the headset, hence the configurable source and invert flags.
    `smoothing` is an exponential filter factor in [0, 1); 0 disables it
    and trusts the phone's own sensor fusion.
    """

    yaw_source: str = PHONE_YAW
    roll_source: str = PHONE_ROLL
    invert_yaw: bool = False
    invert_roll: bool = False
    smoothing: float = 0.0

    def __post_init__(self):
        if self.yaw_source != PHONE_YAW:
            raise ValueError(f"unsupported yaw source {self.yaw_source!r}")
        if self.roll_source not in (PHONE_ROLL, PHONE_PITCH):
            raise ValueError(f"unsupported roll source {self.roll_source!r}")
        if not (0.0 <= self.smoothing < 1.0):
            raise ValueError("smoothing must lie in [0, 1)")


def _require_number(msg: dict, key: str) -> float:
    value = msg.get(key)
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise MalformedMessageError(f"field {key!r} missing or not a number")
    if not math.isfinite(value):
        raise MalformedMessageError(f"field {key!r} is not finite")
    return float(value)


def parse_orientation_message(text: str, now_ms: float) -> OrientationSample:
    """Validate one wire record and return a wrapped, server-stamped sample.

    Wire schema: JSON object with numeric roll/pitch/yaw (degrees), an
    unsigned integer seq, and an optional client timestamp t (ms).
    """
    try:
        msg = json.loads(text)
    except (json.JSONDecodeError, UnicodeDecodeError, TypeError) as exc:
        raise MalformedMessageError(f"not valid JSON: {exc}") from exc
    if not isinstance(msg, dict):
        raise MalformedMessageError("message must be a JSON object")

    roll = _require_number(msg, "roll")
    pitch = _require_number(msg, "pitch")
    yaw = _require_number(msg, "yaw")

    seq = msg.get("seq")
    if isinstance(seq, bool) or not isinstance(seq, int) or seq < 0:
        raise MalformedMessageError("field 'seq' missing or not an unsigned integer")
    if "t" in msg:
        _require_number(msg, "t")

    return OrientationSample(
        roll=wrap180(roll),
        pitch=wrap180(pitch),
        yaw=wrap180(yaw),
        timestamp_ms=now_ms,
        seq=seq,
    )


def calibrate(sample: OrientationSample) -> CalibrationReference:
    """Capture the sample's attitude as the zero reference point."""
    return CalibrationReference(
        roll0=sample.roll,
        pitch0=sample.pitch,
        yaw0=sample.yaw,
        established_at_ms=sample.timestamp_ms,
    )


def normalize(
    sample: OrientationSample,
    ref: CalibrationReference,
    cfg: HeadControlConfig = HeadControlConfig(),
) -> HeadCommand:
    """Turn a raw sample into a head command relative to the reference.

    Each configured axis is the shortest signed angular difference from the
    reference (continuous across the +/-180 seam) clamped to +/-90 degrees.
    """
    yaw = clamp(wrap180(sample.yaw - ref.yaw0), -90.0, 90.0)
    if cfg.invert_yaw:
        yaw = -yaw

    if cfg.roll_source == PHONE_PITCH:
        raw_roll = sample.pitch - ref.pitch0
    else:
        raw_roll = sample.roll - ref.roll0
    roll = clamp(wrap180(raw_roll), -90.0, 90.0)
    if cfg.invert_roll:
        roll = -roll

    return HeadCommand(yaw=yaw, roll=roll)


class HeadTracker:
    """Per-session ingest state: reference, sequence gate, optional smoothing.

    Owned by a single orientation session; the fusion loop only ever sees
    the immutable HeadCommand snapshots this produces.
    """

    def __init__(self, cfg: HeadControlConfig | None = None):
        self.cfg = cfg or HeadControlConfig()
        self.reference: CalibrationReference | None = None
        self.last_seq: int | None = None
        self.last_command: HeadCommand | None = None
        self.dropped_malformed = 0
        self.dropped_out_of_order = 0
        self._recalibrate_pending = False

    def request_recalibration(self) -> None:
        """Make the next accepted sample the new zero reference."""
        self._recalibrate_pending = True

    def ingest(self, text: str, now_ms: float) -> HeadCommand | None:
        """Process one wire message; returns a command or None if dropped."""
        try:
            sample = parse_orientation_message(text, now_ms)
        except MalformedMessageError:
            self.dropped_malformed += 1
            return None

        if self.last_seq is not None and sample.seq <= self.last_seq:
            self.dropped_out_of_order += 1
            return None
        self.last_seq = sample.seq

        if self.reference is None or self._recalibrate_pending:
            self.reference = calibrate(sample)
            self._recalibrate_pending = False

        cmd = normalize(sample, self.reference, self.cfg)
        alpha = self.cfg.smoothing
        if alpha > 0.0 and self.last_command is not None:
            cmd = HeadCommand(
                yaw=alpha * self.last_command.yaw + (1.0 - alpha) * cmd.yaw,
                roll=alpha * self.last_command.roll + (1.0 - alpha) * cmd.roll,
            )
        self.last_command = cmd
        return cmd
