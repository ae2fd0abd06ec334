"""Hardware-free input sources: scripted pedals, simulated leaders, keyboard.

The scripted pedal source emits bit-exact wire frames on a 50 Hz keepalive
grid so the staleness detector can tell "pedals released" from "cable
dead"; scripts may inject corrupt frames to exercise decoder robustness.
The keyboard source is the discrete step-control baseline: each key press
becomes a fixed-duration pedal pulse or a fixed head-angle increment.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

from ..angles import clamp
from ..arms import encode_leader_frame
from ..errors import InvalidScriptError
from ..model import (
    ArmJointVector,
    HeadCommand,
    MODALITY_HEAD,
    MODALITY_PEDALS,
    NUM_ARM_JOINTS,
)
from ..pedals import (
    BIT_BACKWARD,
    BIT_FORWARD,
    BIT_LEFT,
    BIT_RIGHT,
    encode_pedal_frame,
    pedal_state_from_bitmask,
)

KEEPALIVE_INTERVAL_MS = 20.0  # 50 Hz

_PEDAL_NAMES = {
    "forward": BIT_FORWARD,
    "backward": BIT_BACKWARD,
    "left": BIT_LEFT,
    "right": BIT_RIGHT,
}


@dataclass(frozen=True)
class PedalEvent:
    t_ms: float
    bitmask: int | None   # None for corrupt-injection events
    corrupt: bool = False


def _corrupt(frame: bytes) -> bytes:
    return frame[:-1] + bytes([frame[-1] ^ 0xFF])


class ScriptedPedalSource:
    """Replays timed pedal events as a wire byte stream.

    Between events the current bitmask repeats on the keepalive grid, so an
    empty script produces periodic "no pedals" frames.
    """

    def __init__(self, events: list[dict] | None = None):
        self.events: list[PedalEvent] = []
        last_t = -math.inf
        for i, ev in enumerate(events or []):
            if not isinstance(ev, dict) or "t_ms" not in ev:
                raise InvalidScriptError(f"event {i} must be a mapping with t_ms")
            t = ev["t_ms"]
            if not isinstance(t, (int, float)) or t < 0:
                raise InvalidScriptError(f"event {i}: t_ms must be a non-negative number")
            if t < last_t:
                raise InvalidScriptError(f"event {i}: events must be time-ordered")
            last_t = t
            if ev.get("corrupt"):
                self.events.append(PedalEvent(t_ms=float(t), bitmask=None, corrupt=True))
                continue
            pedals = ev.get("pedals", [])
            if not isinstance(pedals, list):
                raise InvalidScriptError(f"event {i}: pedals must be a list of names")
            mask = 0
            for name in pedals:
                if name not in _PEDAL_NAMES:
                    raise InvalidScriptError(f"event {i}: unknown pedal {name!r}")
                mask |= _PEDAL_NAMES[name]
            self.events.append(PedalEvent(t_ms=float(t), bitmask=mask))

    @classmethod
    def from_file(cls, path: str | Path) -> "ScriptedPedalSource":
        try:
            data = json.loads(Path(path).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise InvalidScriptError(f"cannot load pedal script {path}: {exc}") from exc
        if not isinstance(data, list):
            raise InvalidScriptError("pedal script must be a JSON list of events")
        return cls(data)

    def bitmask_at(self, t_ms: float) -> int:
        mask = 0
        for ev in self.events:
            if ev.t_ms > t_ms:
                break
            if not ev.corrupt:
                mask = ev.bitmask
        return mask

    def frames_between(self, t0_ms: float, t1_ms: float) -> list[tuple[float, bytes]]:
        """All (time, frame) emissions in the half-open window (t0, t1]."""
        if t1_ms < t0_ms:
            raise InvalidScriptError("window end precedes start")
        times: list[tuple[float, bool]] = []
        k = math.floor(t0_ms / KEEPALIVE_INTERVAL_MS) + 1
        while k * KEEPALIVE_INTERVAL_MS <= t1_ms:
            times.append((k * KEEPALIVE_INTERVAL_MS, False))
            k += 1
        for ev in self.events:
            if t0_ms < ev.t_ms <= t1_ms:
                times.append((ev.t_ms, ev.corrupt))
        times.sort()
        out = []
        for t, corrupt in times:
            frame = encode_pedal_frame(self.bitmask_at(t))
            out.append((t, _corrupt(frame) if corrupt else frame))
        return out


class SimulatedLeaderSource:
    """Deterministic smooth joint motion standing in for a leader arm."""

    def __init__(
        self,
        side: str,
        amplitude_deg: float = 30.0,
        rate_hz: float = 30.0,
        periods_s: tuple[float, ...] = (8.0, 10.0, 12.0, 14.0, 16.0),
    ):
        if len(periods_s) != NUM_ARM_JOINTS:
            raise ValueError("one period per joint")
        self.side = side
        self.amplitude = amplitude_deg
        self.interval_ms = 1000.0 / rate_hz
        self.periods = periods_s

    def vector_at(self, t_ms: float) -> ArmJointVector:
        t = t_ms / 1000.0
        joints = tuple(
            round(self.amplitude * math.sin(2.0 * math.pi * t / p) * 100.0) / 100.0
            for p in self.periods
        )
        gripper = round((0.5 + 0.5 * math.sin(2.0 * math.pi * t / 6.0)) * 255.0) / 255.0
        return ArmJointVector(side=self.side, joints=joints, gripper=gripper)

    def frames_between(self, t0_ms: float, t1_ms: float) -> list[tuple[float, bytes]]:
        out = []
        k = math.floor(t0_ms / self.interval_ms) + 1
        while k * self.interval_ms <= t1_ms:
            t = k * self.interval_ms
            out.append((t, encode_leader_frame(self.vector_at(t))))
            k += 1
        return out


# Keyboard baseline: discrete, step-based control. Base keys compile to a
# timed pedal pulse (so the whole base path stays identical); head keys
# accumulate fixed increments.
BASE_KEYS = {
    "w": BIT_FORWARD,
    "s": BIT_BACKWARD,
    "a": BIT_LEFT,
    "d": BIT_RIGHT,
    "q": BIT_FORWARD | BIT_LEFT,    # rotate CCW
    "e": BIT_FORWARD | BIT_RIGHT,   # rotate CW
}
HEAD_KEYS = {
    "j": (1.0, 0.0),    # yaw left
    "l": (-1.0, 0.0),   # yaw right
    "i": (0.0, 1.0),    # roll up
    "k": (0.0, -1.0),   # roll down
}


class KeyboardTeleop:
    """Step-based base/head control from single key presses.

    Each base key press produces one velocity burst lasting
    step_duration_ms; each head key press moves the head target by
    head_step_deg, clamped to +/-90. Unmapped keys are ignored.
    """

    def __init__(self, hub, clock, step_duration_ms: float = 200.0, head_step_deg: float = 5.0):
        self.hub = hub
        self.clock = clock
        self.step_duration_ms = step_duration_ms
        self.head_step_deg = head_step_deg
        self._release_at_ms: float | None = None
        self._active_mask = 0
        self._head_yaw = 0.0
        self._head_roll = 0.0

    def press(self, key: str) -> bool:
        """Handle one key press; returns False for unmapped keys."""
        now = self.clock.now_ms()
        key = key.lower()
        if key in BASE_KEYS:
            self._active_mask = BASE_KEYS[key]
            self._release_at_ms = now + self.step_duration_ms
            self.hub.set_connected(MODALITY_PEDALS, True)
            self.hub.set_pedals(pedal_state_from_bitmask(self._active_mask, now), now)
            return True
        if key in HEAD_KEYS:
            dyaw, droll = HEAD_KEYS[key]
            self._head_yaw = clamp(self._head_yaw + dyaw * self.head_step_deg, -90.0, 90.0)
            self._head_roll = clamp(self._head_roll + droll * self.head_step_deg, -90.0, 90.0)
            self.hub.set_connected(MODALITY_HEAD, True)
            self.hub.set_head(HeadCommand(yaw=self._head_yaw, roll=self._head_roll), now)
            return True
        return False

    def poll(self, now_ms: float) -> None:
        """Pre-tick hook: keep an active burst fresh, then release it."""
        if self._release_at_ms is None:
            return
        if now_ms >= self._release_at_ms:
            self._active_mask = 0
            self._release_at_ms = None
            self.hub.set_pedals(pedal_state_from_bitmask(0, now_ms), now_ms)
        else:
            self.hub.set_pedals(pedal_state_from_bitmask(self._active_mask, now_ms), now_ms)

