"""The unified fixed-rate control loop.

Every input path publishes its latest value into the ModalityHub; the loop
is the single reader. Each tick it snapshots the hub, applies the
staleness/safety policy, and emits exactly one UnifiedCommand:

  - base velocity comes from the pedal truth table while the pedal stream
    is fresh, otherwise (0,0,0) with safety=base_halted;
  - head and arms hold their previous values when their streams go stale
    (freezing a pose is safe, continuing base motion is not);
  - losing the operator client freezes everything (base zeroed, head/arms
    held) until the client returns.

Scheduling is fixed-timestep with drift correction: deadline n is always
start + n * period, so a late tick is followed by catch-up ticks rather
than long-run rate drift.
"""

from __future__ import annotations

import logging
import statistics
import threading
from collections import deque
from dataclasses import dataclass
from typing import Callable

from .arms import ArmCalibration, IDENTITY_CALIBRATION, map_leader_to_follower, rate_limit
from .model import (
    ALL_MODALITIES,
    MODALITY_CLIENT,
    MODALITY_HEAD,
    MODALITY_LEFT_LEADER,
    MODALITY_PEDALS,
    MODALITY_RIGHT_LEADER,
    SAFETY_BASE_HALTED,
    SAFETY_FROZEN,
    SAFETY_NOMINAL,
    SIDE_LEFT,
    SIDE_RIGHT,
    ArmJointVector,
    HeadCommand,
    ModalityStatus,
    PedalState,
    UnifiedCommand,
    ZERO_VELOCITY,
    initial_command,
)
from .pedals import PedalConfig, pedals_to_velocity

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class FusionConfig:
    rate_hz: float = 30.0
    pedal_stale_ms: float = 200.0
    head_stale_ms: float = 1000.0
    arm_stale_ms: float = 1000.0
    client_stale_ms: float = 2000.0
    arm_max_step_deg: float = 4.0   # per tick; ~120 deg/s at 30 Hz

    def __post_init__(self):
        if self.rate_hz <= 0.0:
            raise ValueError("rate_hz must be positive")
        period = 1000.0 / self.rate_hz
        for name in ("pedal_stale_ms", "head_stale_ms", "arm_stale_ms", "client_stale_ms"):
            if getattr(self, name) <= period:
                raise ValueError(f"{name} must exceed the {period:.1f} ms tick period")
        if self.arm_max_step_deg <= 0.0:
            raise ValueError("arm_max_step_deg must be positive")

    @property
    def period_ms(self) -> float:
        return 1000.0 / self.rate_hz


@dataclass(frozen=True)
class TimedValue:
    value: object
    t_ms: float


@dataclass(frozen=True)
class FusionInputs:
    """One coherent snapshot of every modality's latest value."""

    head: TimedValue | None = None
    pedals: TimedValue | None = None
    left_leader: TimedValue | None = None
    right_leader: TimedValue | None = None
    client_t_ms: float | None = None


class ModalityHub:
    """Latest-value mailbox between input sessions and the fusion loop.

    Writers replace whole immutable values under a lock (last-writer-wins);
    the loop takes an atomic snapshot each tick. No writer can ever block
    the loop for longer than these tiny critical sections.
    """

    def __init__(self):
        self._lock = threading.Lock()
        self._head: TimedValue | None = None
        self._pedals: TimedValue | None = None
        self._leaders: dict[str, TimedValue | None] = {SIDE_LEFT: None, SIDE_RIGHT: None}
        self._client_t: float | None = None
        self._connected: dict[str, bool] = {m: False for m in ALL_MODALITIES}

    def set_head(self, cmd: HeadCommand, t_ms: float) -> None:
        with self._lock:
            self._head = TimedValue(cmd, t_ms)

    def set_pedals(self, state: PedalState, t_ms: float) -> None:
        with self._lock:
            self._pedals = TimedValue(state, t_ms)

    def set_leader(self, side: str, joints: ArmJointVector, t_ms: float) -> None:
        with self._lock:
            self._leaders[side] = TimedValue(joints, t_ms)

    def touch_client(self, t_ms: float) -> None:
        with self._lock:
            self._client_t = t_ms

    def set_connected(self, modality: str, connected: bool) -> None:
        with self._lock:
            self._connected[modality] = connected

    def snapshot(self) -> FusionInputs:
        with self._lock:
            return FusionInputs(
                head=self._head,
                pedals=self._pedals,
                left_leader=self._leaders[SIDE_LEFT],
                right_leader=self._leaders[SIDE_RIGHT],
                client_t_ms=self._client_t,
            )

    def statuses(self, now_ms: float, cfg: FusionConfig) -> list[ModalityStatus]:
        snap = self.snapshot()
        last_seen = {
            MODALITY_HEAD: snap.head.t_ms if snap.head else None,
            MODALITY_PEDALS: snap.pedals.t_ms if snap.pedals else None,
            MODALITY_LEFT_LEADER: snap.left_leader.t_ms if snap.left_leader else None,
            MODALITY_RIGHT_LEADER: snap.right_leader.t_ms if snap.right_leader else None,
            MODALITY_CLIENT: snap.client_t_ms,
        }
        thresholds = {
            MODALITY_HEAD: cfg.head_stale_ms,
            MODALITY_PEDALS: cfg.pedal_stale_ms,
            MODALITY_LEFT_LEADER: cfg.arm_stale_ms,
            MODALITY_RIGHT_LEADER: cfg.arm_stale_ms,
            MODALITY_CLIENT: cfg.client_stale_ms,
        }
        with self._lock:
            connected = dict(self._connected)
        out = []
        for m in ALL_MODALITIES:
            seen = last_seen[m]
            stale = seen is None or (now_ms - seen) > thresholds[m]
            out.append(ModalityStatus(modality=m, connected=connected[m], last_seen_ms=seen, stale=stale))
        return out


class TickStats:
    """Per-tick lateness (jitter) bookkeeping for the loop's own telemetry."""

    def __init__(self, window: int = 10000):
        self._lateness = deque(maxlen=window)
        self.count = 0
        self.started_at_ms: float | None = None
        self.last_tick_ms: float | None = None

    def record(self, lateness_ms: float, now_ms: float) -> None:
        if self.started_at_ms is None:
            self.started_at_ms = now_ms
        self.count += 1
        self.last_tick_ms = now_ms
        self._lateness.append(max(0.0, lateness_ms))

    def mean_rate_hz(self) -> float:
        if self.count < 2 or self.started_at_ms is None or self.last_tick_ms is None:
            return 0.0
        elapsed_ms = self.last_tick_ms - self.started_at_ms
        if elapsed_ms <= 0.0:
            return 0.0
        return (self.count - 1) / (elapsed_ms / 1000.0)

    def jitter_summary(self) -> dict:
        if not self._lateness:
            return {"mean_ms": 0.0, "p50_ms": 0.0, "p99_ms": 0.0, "max_ms": 0.0}
        data = sorted(self._lateness)
        return {
            "mean_ms": statistics.fmean(data),
            "p50_ms": data[len(data) // 2],
            "p99_ms": data[min(len(data) - 1, int(len(data) * 0.99))],
            "max_ms": data[-1],
        }


def _freshness(timed: TimedValue | None, now_ms: float, threshold_ms: float) -> bool:
    return timed is not None and (now_ms - timed.t_ms) <= threshold_ms


class FusionLoop:
    """Fuses the latest modality snapshots into one command per tick."""

    def __init__(
        self,
        cfg: FusionConfig,
        hub: ModalityHub,
        clock,
        pedal_cfg: PedalConfig | None = None,
        left_calibration: ArmCalibration = IDENTITY_CALIBRATION,
        right_calibration: ArmCalibration = IDENTITY_CALIBRATION,
    ):
        self.cfg = cfg
        self.hub = hub
        self.clock = clock
        self.pedal_cfg = pedal_cfg or PedalConfig()
        self.calibrations = {SIDE_LEFT: left_calibration, SIDE_RIGHT: right_calibration}
        self.prev = initial_command()
        self.stats = TickStats()
        self.fault: Exception | None = None
        self._stop = threading.Event()
        self._pre_tick_hooks: list[Callable[[float], None]] = []

    def add_pre_tick_hook(self, hook: Callable[[float], None]) -> None:
        """Hook called with now_ms before each tick (used by input sources)."""
        self._pre_tick_hooks.append(hook)

    def _arm(self, prev_arm: ArmJointVector, leader: TimedValue | None, now_ms: float, side: str) -> ArmJointVector:
        cfg = self.cfg
        if not _freshness(leader, now_ms, cfg.arm_stale_ms):
            return prev_arm
        target = map_leader_to_follower(leader.value, self.calibrations[side])
        return rate_limit(prev_arm, target, cfg.arm_max_step_deg)

    def tick_once(self) -> UnifiedCommand:
        """Compute and latch the next command from current snapshots."""
        now = self.clock.now_ms()
        for hook in self._pre_tick_hooks:
            hook(now)
        cfg = self.cfg
        snap = self.hub.snapshot()
        prev = self.prev

        if _freshness(snap.pedals, now, cfg.pedal_stale_ms):
            base = pedals_to_velocity(snap.pedals.value, self.pedal_cfg)
            safety = SAFETY_NOMINAL
        else:
            base = ZERO_VELOCITY
            safety = SAFETY_BASE_HALTED

        if _freshness(snap.head, now, cfg.head_stale_ms):
            head = snap.head.value
        else:
            head = prev.head

        left = self._arm(prev.left_arm, snap.left_leader, now, SIDE_LEFT)
        right = self._arm(prev.right_arm, snap.right_leader, now, SIDE_RIGHT)

        # Client-loss freeze applies only once an operator client has been
        # seen; a headless scripted run must not start life frozen.
        if snap.client_t_ms is not None and (now - snap.client_t_ms) > cfg.client_stale_ms:
            base = ZERO_VELOCITY
            safety = SAFETY_FROZEN
            head = prev.head
            left = prev.left_arm
            right = prev.right_arm

        cmd = UnifiedCommand(
            tick=prev.tick + 1,
            timestamp_ms=now,
            base=base,
            head=head,
            left_arm=left,
            right_arm=right,
            safety=safety,
        )
        self.prev = cmd
        return cmd

    def make_stop_command(self) -> UnifiedCommand:
        """The final all-zero-base command emitted on shutdown."""
        prev = self.prev
        cmd = UnifiedCommand(
            tick=prev.tick + 1,
            timestamp_ms=self.clock.now_ms(),
            base=ZERO_VELOCITY,
            head=prev.head,
            left_arm=prev.left_arm,
            right_arm=prev.right_arm,
            safety=SAFETY_FROZEN,
        )
        self.prev = cmd
        return cmd

    def run(self, sink: Callable[[UnifiedCommand], None], max_ticks: int | None = None) -> None:
        """Drive tick_once at the configured rate until stopped.

        Deadlines are start + n * period; a late tick is followed by
        immediate catch-up ticks, so indices stay consecutive and the mean
        rate holds over long runs. On shutdown (or sink failure) one final
        zero-base command is emitted.
        """
        self._stop.clear()
        period = self.cfg.period_ms
        start = self.clock.now_ms()
        n = 0
        try:
            while not self._stop.is_set() and (max_ticks is None or n < max_ticks):
                n += 1
                deadline = start + n * period
                self.clock.sleep_until_ms(deadline)
                now = self.clock.now_ms()
                cmd = self.tick_once()
                self.stats.record(now - deadline, now)
                try:
                    sink(cmd)
                except Exception as exc:
                    self.fault = exc
                    logger.exception("command sink failed; stopping loop")
                    break
        finally:
            try:
                sink(self.make_stop_command())
            except Exception:
                logger.exception("could not deliver final stop command")

    def stop(self) -> None:
        self._stop.set()
