"""Kinematic simulator: omni-base IK/FK, pose integration, synthetic camera.

The platform model is purely kinematic (velocity-controlled, no dynamics):
a three-wheeled omnidirectional base, a 2-DOF head, and two 5-DOF arms that
track their commanded targets at configured maximum speeds. Camera frames
are synthetic and deterministic so the whole video path is testable
byte-exactly.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass

import numpy as np

from .angles import clamp, wrap180
from .errors import DegenerateGeometryError, InvalidFrameError, InvalidStepError
from .model import (
    SIDE_LEFT,
    SIDE_RIGHT,
    ArmJointVector,
    BaseVelocity,
    HeadCommand,
    UnifiedCommand,
    zero_arm,
)
from .video import LANDSCAPE, PORTRAIT, VideoFrame


@dataclass(frozen=True)
class BaseGeometry:
    """Omni-base geometry: wheel radius, mount circle radius, mount angles."""

    wheel_radius: float = 0.05
    wheel_offset: float = 0.15
    wheel_angles_deg: tuple[float, ...] = (90.0, 210.0, 330.0)

    def __post_init__(self):
        if self.wheel_radius <= 0.0 or self.wheel_offset <= 0.0:
            raise ValueError("wheel radius and offset must be positive")
        if len(self.wheel_angles_deg) != 3:
            raise ValueError("exactly three wheels")
        wrapped = [a % 360.0 for a in self.wheel_angles_deg]
        if len({round(a, 9) for a in wrapped}) != 3:
            raise DegenerateGeometryError("wheel angles must be distinct modulo 360")


@dataclass(frozen=True)
class WheelSpeeds:
    w1: float = 0.0
    w2: float = 0.0
    w3: float = 0.0


@dataclass(frozen=True)
class RobotState:
    """Full simulated platform state. Pose is world-frame, heading degrees."""

    x: float
    y: float
    heading_deg: float
    head: HeadCommand
    left_arm: ArmJointVector
    right_arm: ArmJointVector
    wheels: WheelSpeeds
    sim_time_ms: float


def initial_state() -> RobotState:
    return RobotState(
        x=0.0,
        y=0.0,
        heading_deg=0.0,
        head=HeadCommand(0.0, 0.0),
        left_arm=zero_arm(SIDE_LEFT),
        right_arm=zero_arm(SIDE_RIGHT),
        wheels=WheelSpeeds(),
        sim_time_ms=0.0,
    )


class BaseKinematics:
    """IK/FK between body velocity and the three wheel speeds.

    Wheel i mounted at angle theta_i on a circle of radius R spins at
        w_i = (-sin(theta_i) * vx + cos(theta_i) * vy + R * omega) / r.
    FK solves the resulting 3x3 linear system; invertibility is validated
    once at construction, never per call.
    """

    def __init__(self, geometry: BaseGeometry):
        self.geometry = geometry
        rads = [math.radians(a) for a in geometry.wheel_angles_deg]
        m = np.array(
            [[-math.sin(t), math.cos(t), geometry.wheel_offset] for t in rads],
            dtype=np.float64,
        )
        det = float(np.linalg.det(m))
        if abs(det) < 1e-9:
            raise DegenerateGeometryError(f"kinematic matrix is singular (det={det:.3e})")
        self._m = m
        self._m_inv = np.linalg.inv(m)

    def ik(self, v: BaseVelocity) -> WheelSpeeds:
        r = self.geometry.wheel_radius
        w = [
            (row[0] * v.vx + row[1] * v.vy + row[2] * v.omega) / r
            for row in self._m
        ]
        return WheelSpeeds(w1=float(w[0]), w2=float(w[1]), w3=float(w[2]))

    def fk(self, w: WheelSpeeds) -> BaseVelocity:
        rim = np.array([w.w1, w.w2, w.w3], dtype=np.float64) * self.geometry.wheel_radius
        vx, vy, omega = self._m_inv @ rim
        return BaseVelocity(vx=float(vx), vy=float(vy), omega=float(omega))


@functools.lru_cache(maxsize=8)
def _kinematics(geometry: BaseGeometry) -> BaseKinematics:
    return BaseKinematics(geometry)


def base_ik(v: BaseVelocity, geometry: BaseGeometry) -> WheelSpeeds:
    """Body velocity -> wheel speeds."""
    return _kinematics(geometry).ik(v)


def base_fk(w: WheelSpeeds, geometry: BaseGeometry) -> BaseVelocity:
    """Wheel speeds -> body velocity; exact inverse of base_ik."""
    return _kinematics(geometry).fk(w)


@dataclass(frozen=True)
class SimConfig:
    geometry: BaseGeometry = BaseGeometry()
    head_speed_dps: float = 180.0      # head axis tracking speed
    arm_speed_dps: float = 240.0       # per-joint tracking speed
    gripper_speed: float = 2.0         # full strokes per second
    frame_px_per_m: float = 100.0      # background grid scroll gain
    crosshair_gain_px_per_deg: float = 2.0


def _toward(current: float, target: float, max_delta: float) -> float:
    return current + clamp(target - current, -max_delta, max_delta)


def _track_arm(current: ArmJointVector, target: ArmJointVector, dt: float, cfg: SimConfig) -> ArmJointVector:
    step = cfg.arm_speed_dps * dt
    joints = tuple(
        _toward(c, t, step) for c, t in zip(current.joints, target.joints)
    )
    gripper = _toward(current.gripper, target.gripper, cfg.gripper_speed * dt)
    return ArmJointVector(side=current.side, joints=joints, gripper=clamp(gripper, 0.0, 1.0))


def step(state: RobotState, cmd: UnifiedCommand, dt: float, cfg: SimConfig = SimConfig()) -> RobotState:
    """Advance the platform one explicit-Euler step of dt seconds.

    Pose integrates the body-frame velocity rotated into the world frame;
    head and arm joints move toward their commanded targets at the
    configured speeds; wheel speeds mirror the base command through IK.
    """
    if not (0.0 < dt <= 0.1):
        raise InvalidStepError(f"dt must be in (0, 0.1], got {dt}")

    phi = math.radians(state.heading_deg)
    vx, vy, omega = cmd.base.vx, cmd.base.vy, cmd.base.omega
    x = state.x + dt * (vx * math.cos(phi) - vy * math.sin(phi))
    y = state.y + dt * (vx * math.sin(phi) + vy * math.cos(phi))
    heading = wrap180(state.heading_deg + math.degrees(omega * dt))

    head_step = cfg.head_speed_dps * dt
    head = HeadCommand(
        yaw=_toward(state.head.yaw, cmd.head.yaw, head_step),
        roll=_toward(state.head.roll, cmd.head.roll, head_step),
    )

    return RobotState(
        x=x,
        y=y,
        heading_deg=heading,
        head=head,
        left_arm=_track_arm(state.left_arm, cmd.left_arm, dt, cfg),
        right_arm=_track_arm(state.right_arm, cmd.right_arm, dt, cfg),
        wheels=_kinematics(cfg.geometry).ik(cmd.base),
        sim_time_ms=state.sim_time_ms + dt * 1000.0,
    )


# Synthetic camera: fixed palette, 40 px grid, crosshair tracking the head.
_BG_COLOR = (18, 20, 26)
_GRID_COLOR = (70, 74, 84)
_CROSS_COLOR = (240, 240, 240)
_GRID_SPACING = 40
_CROSS_ARM = 10


def render_synthetic_frame(
    state: RobotState, width: int, height: int, cfg: SimConfig = SimConfig()
) -> VideoFrame:
    """Deterministic first-person stand-in frame.

    A background grid scrolls with the base pose (frame_px_per_m gain) and a
    crosshair sits crosshair_gain_px_per_deg pixels off center per degree of
    head yaw (horizontal) and roll (vertical). Identical states render
    byte-identical buffers.
    """
    if width <= 0 or height <= 0:
        raise InvalidFrameError(f"frame dimensions must be positive, got {width}x{height}")

    img = np.empty((height, width, 3), dtype=np.uint8)
    img[:, :] = _BG_COLOR

    ox = int(round(state.x * cfg.frame_px_per_m))
    oy = int(round(state.y * cfg.frame_px_per_m))
    cols = (np.arange(width) + ox) % _GRID_SPACING == 0
    rows = (np.arange(height) + oy) % _GRID_SPACING == 0
    img[:, cols] = _GRID_COLOR
    img[rows, :] = _GRID_COLOR

    k = cfg.crosshair_gain_px_per_deg
    px = int(clamp(width // 2 + round(k * state.head.yaw), 0, width - 1))
    py = int(clamp(height // 2 + round(k * state.head.roll), 0, height - 1))
    img[py, max(0, px - _CROSS_ARM): px + _CROSS_ARM + 1] = _CROSS_COLOR
    img[max(0, py - _CROSS_ARM): py + _CROSS_ARM + 1, px] = _CROSS_COLOR

    return VideoFrame(
        width=width,
        height=height,
        pixels=img.tobytes(),
        source_orientation=PORTRAIT if height > width else LANDSCAPE,
        timestamp_ms=state.sim_time_ms,
    )


class Simulator:
    """Holds the current RobotState and applies commands as they arrive."""

    def __init__(self, cfg: SimConfig | None = None, state: RobotState | None = None):
        self.cfg = cfg or SimConfig()
        self.state = state if state is not None else initial_state()
        # Fail fast on degenerate geometry rather than on the first step.
        _kinematics(self.cfg.geometry)

    def apply(self, cmd: UnifiedCommand, dt: float) -> RobotState:
        self.state = step(self.state, cmd, dt, self.cfg)
        return self.state

    def render(self, width: int, height: int) -> VideoFrame:
        return render_synthetic_frame(self.state, width, height, self.cfg)
