"""Episode recording and deterministic replay.

Episodes are line-delimited JSON: one header record (format version,
config hash, sim parameters, initial state), one record per tick holding
the flattened command and resulting state plus the dt used, and one footer
with the episode summary. Replaying a file re-runs the simulator through
the recorded commands with the recorded dt sequence, reproducing the final
state bit-exactly.
"""

from __future__ import annotations

import hashlib
import json
import logging
import queue
import threading
from pathlib import Path

from .errors import ReplayError
from .model import (
    ArmJointVector,
    BaseVelocity,
    HeadCommand,
    NUM_ARM_JOINTS,
    SIDE_LEFT,
    SIDE_RIGHT,
    UnifiedCommand,
)
from .sim import BaseGeometry, RobotState, SimConfig, WheelSpeeds, step

logger = logging.getLogger(__name__)

FORMAT_VERSION = 1
FLUSH_EVERY = 30


def _flatten_arm(prefix: str, arm: ArmJointVector) -> dict:
    rec = {f"{prefix}_j{i + 1}": arm.joints[i] for i in range(NUM_ARM_JOINTS)}
    rec[f"{prefix}_grip"] = arm.gripper
    return rec


def _unflatten_arm(prefix: str, side: str, rec: dict) -> ArmJointVector:
    return ArmJointVector(
        side=side,
        joints=tuple(rec[f"{prefix}_j{i + 1}"] for i in range(NUM_ARM_JOINTS)),
        gripper=rec[f"{prefix}_grip"],
    )


def flatten_command(cmd: UnifiedCommand) -> dict:
    rec = {
        "tick": cmd.tick,
        "t_ms": cmd.timestamp_ms,
        "base_vx": cmd.base.vx,
        "base_vy": cmd.base.vy,
        "base_omega": cmd.base.omega,
        "head_yaw": cmd.head.yaw,
        "head_roll": cmd.head.roll,
        "safety": cmd.safety,
    }
    rec.update(_flatten_arm("left", cmd.left_arm))
    rec.update(_flatten_arm("right", cmd.right_arm))
    return rec


def unflatten_command(rec: dict) -> UnifiedCommand:
    return UnifiedCommand(
        tick=rec["tick"],
        timestamp_ms=rec["t_ms"],
        base=BaseVelocity(vx=rec["base_vx"], vy=rec["base_vy"], omega=rec["base_omega"]),
        head=HeadCommand(yaw=rec["head_yaw"], roll=rec["head_roll"]),
        left_arm=_unflatten_arm("left", SIDE_LEFT, rec),
        right_arm=_unflatten_arm("right", SIDE_RIGHT, rec),
        safety=rec["safety"],
    )


def flatten_state(state: RobotState) -> dict:
    rec = {
        "x": state.x,
        "y": state.y,
        "heading": state.heading_deg,
        "state_head_yaw": state.head.yaw,
        "state_head_roll": state.head.roll,
        "w1": state.wheels.w1,
        "w2": state.wheels.w2,
        "w3": state.wheels.w3,
        "sim_time_ms": state.sim_time_ms,
    }
    rec.update(_flatten_arm("state_left", state.left_arm))
    rec.update(_flatten_arm("state_right", state.right_arm))
    return rec


def unflatten_state(rec: dict) -> RobotState:
    return RobotState(
        x=rec["x"],
        y=rec["y"],
        heading_deg=rec["heading"],
        head=HeadCommand(yaw=rec["state_head_yaw"], roll=rec["state_head_roll"]),
        left_arm=_unflatten_arm("state_left", SIDE_LEFT, rec),
        right_arm=_unflatten_arm("state_right", SIDE_RIGHT, rec),
        wheels=WheelSpeeds(w1=rec["w1"], w2=rec["w2"], w3=rec["w3"]),
        sim_time_ms=rec["sim_time_ms"],
    )


def _sim_section(cfg: SimConfig) -> dict:
    return {
        "wheel_radius": cfg.geometry.wheel_radius,
        "wheel_offset": cfg.geometry.wheel_offset,
        "wheel_angles_deg": list(cfg.geometry.wheel_angles_deg),
        "head_speed_dps": cfg.head_speed_dps,
        "arm_speed_dps": cfg.arm_speed_dps,
        "gripper_speed": cfg.gripper_speed,
        "frame_px_per_m": cfg.frame_px_per_m,
        "crosshair_gain_px_per_deg": cfg.crosshair_gain_px_per_deg,
    }


def _sim_config_from_section(section: dict) -> SimConfig:
    return SimConfig(
        geometry=BaseGeometry(
            wheel_radius=section["wheel_radius"],
            wheel_offset=section["wheel_offset"],
            wheel_angles_deg=tuple(section["wheel_angles_deg"]),
        ),
        head_speed_dps=section["head_speed_dps"],
        arm_speed_dps=section["arm_speed_dps"],
        gripper_speed=section["gripper_speed"],
        frame_px_per_m=section["frame_px_per_m"],
        crosshair_gain_px_per_deg=section["crosshair_gain_px_per_deg"],
    )


def config_hash(sim_section: dict, extra: dict | None = None) -> str:
    canonical = json.dumps({"sim": sim_section, "extra": extra or {}}, sort_keys=True)
    return hashlib.sha256(canonical.encode()).hexdigest()[:16]


class EpisodeWriter:
    """Append-only episode log with a periodic flush policy.

    A storage fault stops recording (counted and logged) but never
    propagates into the control loop.
    """

    def __init__(
        self,
        path: str | Path,
        initial_state: RobotState,
        sim_cfg: SimConfig,
        extra_config: dict | None = None,
    ):
        self.path = Path(path)
        self.ticks_written = 0
        self.dropped = 0
        self.failed = False
        self._since_flush = 0
        self._closed = False
        sim_section = _sim_section(sim_cfg)
        self._fh = self.path.open("w", encoding="utf-8")
        self._write(
            {
                "type": "header",
                "version": FORMAT_VERSION,
                "config_hash": config_hash(sim_section, extra_config),
                "sim": sim_section,
                "initial_state": flatten_state(initial_state),
            }
        )
        self._fh.flush()
        self._final_state = initial_state
        self._first_t_ms: float | None = None
        self._last_t_ms: float | None = None

    def _write(self, rec: dict) -> None:
        self._fh.write(json.dumps(rec) + "\n")

    def record_tick(self, cmd: UnifiedCommand, state: RobotState, dt_s: float) -> None:
        """Append one tick; flushes every FLUSH_EVERY records."""
        if self.failed or self._closed:
            return
        rec = {"type": "tick", "dt_s": dt_s}
        rec.update(flatten_command(cmd))
        rec.update(flatten_state(state))
        try:
            self._write(rec)
            self.ticks_written += 1
            self._since_flush += 1
            if self._since_flush >= FLUSH_EVERY:
                self._fh.flush()
                self._since_flush = 0
        except OSError:
            logger.exception("episode write failed; recording stopped")
            self.failed = True
            return
        self._final_state = state
        if self._first_t_ms is None:
            self._first_t_ms = cmd.timestamp_ms
        self._last_t_ms = cmd.timestamp_ms

    def close(self) -> None:
        if self._closed:
            return
        self._closed = True
        duration = 0.0
        if self._first_t_ms is not None and self._last_t_ms is not None:
            duration = self._last_t_ms - self._first_t_ms
        try:
            if not self.failed:
                self._write(
                    {
                        "type": "footer",
                        "ticks": self.ticks_written,
                        "duration_ms": duration,
                        "dropped": self.dropped,
                        "final_state": flatten_state(self._final_state),
                    }
                )
            self._fh.flush()
        except OSError:
            logger.exception("episode footer write failed")
        finally:
            self._fh.close()


class RecorderSink:
    """Bounded queue between the control loop and the episode writer.

    The loop never blocks on storage: when the queue is full the record is
    dropped and counted instead.
    """

    def __init__(self, writer: EpisodeWriter, maxsize: int = 256):
        self.writer = writer
        self._queue: queue.Queue = queue.Queue(maxsize=maxsize)
        self._thread = threading.Thread(target=self._drain, name="episode-writer", daemon=True)
        self._thread.start()

    def record(self, cmd: UnifiedCommand, state: RobotState, dt_s: float) -> None:
        try:
            self._queue.put_nowait((cmd, state, dt_s))
        except queue.Full:
            self.writer.dropped += 1

    def _drain(self) -> None:
        while True:
            item = self._queue.get()
            if item is None:
                return
            self.writer.record_tick(*item)

    def close(self) -> None:
        self._queue.put(None)
        self._thread.join(timeout=5.0)
        self.writer.close()


def read_episode(path: str | Path) -> tuple[dict, list[dict], dict | None]:
    """Parse an episode file into (header, tick records, footer or None)."""
    header = None
    ticks = []
    footer = None
    with Path(path).open("r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ReplayError(line_no, f"not valid JSON: {exc}") from exc
            kind = rec.get("type")
            if line_no == 1:
                if kind != "header":
                    raise ReplayError(line_no, "first record must be the header")
                if rec.get("version") != FORMAT_VERSION:
                    raise ReplayError(line_no, f"unsupported version {rec.get('version')!r}")
                header = rec
            elif kind == "tick":
                ticks.append(rec)
            elif kind == "footer":
                footer = rec
            else:
                raise ReplayError(line_no, f"unknown record type {kind!r}")
    if header is None:
        raise ReplayError(1, "empty file, no header record")
    return header, ticks, footer


def replay(path: str | Path) -> RobotState:
    """Re-run the simulator through a recorded episode; returns final state.

    Deterministic: the same commands and dt sequence applied to the same
    initial state reproduce the recorded trajectory exactly.
    """
    header, ticks, _footer = read_episode(path)
    sim_cfg = _sim_config_from_section(header["sim"])
    state = unflatten_state(header["initial_state"])
    expected_tick = None
    for i, rec in enumerate(ticks):
        line_no = i + 2
        try:
            cmd = unflatten_command(rec)
            dt = rec["dt_s"]
        except (KeyError, TypeError, ValueError) as exc:
            raise ReplayError(line_no, f"malformed tick record: {exc}") from exc
        if expected_tick is not None and cmd.tick != expected_tick:
            raise ReplayError(line_no, f"tick {cmd.tick} not consecutive after {expected_tick - 1}")
        expected_tick = cmd.tick + 1
        state = step(state, cmd, dt, sim_cfg)
    return state
