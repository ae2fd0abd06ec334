"""Foot-pedal input: wire frames, debouncing, and the velocity mapping.

The pedal controller sends 3-byte frames [0xA5, bitmask, 0xA5 XOR bitmask]
at 50 Hz, pedal levels in bits 0-3 (forward, backward, left, right) and the
upper bits reserved zero. Single pedals translate the base, forward+left
spins counterclockwise, forward+right clockwise, and every other
combination commands a safe stop.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import CorruptFrameError, FramingError
from .framing import FrameStreamDecoder, xor_checksum
from .model import BaseVelocity, PedalState

PEDAL_FRAME_HEADER = 0xA5
PEDAL_FRAME_LEN = 3

BIT_FORWARD = 0x01
BIT_BACKWARD = 0x02
BIT_LEFT = 0x04
BIT_RIGHT = 0x08
PEDAL_BITS = 0x0F


@dataclass(frozen=True)
class PedalFrame:
    """One decoded pedal frame; bitmask uses the BIT_* constants."""

    bitmask: int
    checksum_ok: bool = True


@dataclass(frozen=True)
class PedalConfig:
    v_lin: float = 0.5        # m/s for single-pedal translation
    omega_turn: float = 0.8   # rad/s for forward+side rotation
    debounce_ms: float = 20.0

    def __post_init__(self):
        if self.v_lin <= 0.0:
            raise ValueError("v_lin must be positive")
        if self.omega_turn <= 0.0:
            raise ValueError("omega_turn must be positive")
        if self.debounce_ms < 0.0:
            raise ValueError("debounce_ms must be >= 0")


def encode_pedal_frame(bitmask: int) -> bytes:
    """Build the 3-byte wire frame for a pedal bitmask."""
    if bitmask & ~PEDAL_BITS:
        raise FramingError(f"reserved bits must be zero, got 0x{bitmask:02X}")
    return bytes([PEDAL_FRAME_HEADER, bitmask, PEDAL_FRAME_HEADER ^ bitmask])


def decode_pedal_frame(frame: bytes) -> PedalFrame:
    """Decode one exact 3-byte frame; see PedalStreamDecoder for streams."""
    if len(frame) != PEDAL_FRAME_LEN:
        raise FramingError(f"expected {PEDAL_FRAME_LEN} bytes, got {len(frame)}")
    if frame[0] != PEDAL_FRAME_HEADER:
        raise FramingError(f"bad header 0x{frame[0]:02X}")
    if xor_checksum(frame[:2]) != frame[2]:
        raise CorruptFrameError(
            f"checksum mismatch: expected 0x{xor_checksum(frame[:2]):02X}, got 0x{frame[2]:02X}"
        )
    if frame[1] & ~PEDAL_BITS:
        # a compliant controller never sets the reserved bits; a valid
        # checksum over them means noise slipped past the 1-byte XOR
        raise CorruptFrameError(f"reserved bits set in 0x{frame[1]:02X}")
    return PedalFrame(bitmask=frame[1])


def pedal_state_from_bitmask(bitmask: int, timestamp_ms: float) -> PedalState:
    return PedalState(
        forward=bool(bitmask & BIT_FORWARD),
        backward=bool(bitmask & BIT_BACKWARD),
        left=bool(bitmask & BIT_LEFT),
        right=bool(bitmask & BIT_RIGHT),
        timestamp_ms=timestamp_ms,
    )


def bitmask_from_state(state: PedalState) -> int:
    return (
        (BIT_FORWARD if state.forward else 0)
        | (BIT_BACKWARD if state.backward else 0)
        | (BIT_LEFT if state.left else 0)
        | (BIT_RIGHT if state.right else 0)
    )


class PedalStreamDecoder:
    """Resynchronizing decoder for a pedal byte stream."""

    def __init__(self):
        self._stream = FrameStreamDecoder(
            PEDAL_FRAME_HEADER, PEDAL_FRAME_LEN, valid=lambda f: not (f[1] & ~PEDAL_BITS)
        )

    def feed(self, data: bytes) -> list[PedalFrame]:
        return [PedalFrame(bitmask=f[1]) for f in self._stream.feed(data)]

    @property
    def frames_corrupt(self) -> int:
        return self._stream.frames_corrupt

    @property
    def frames_ok(self) -> int:
        return self._stream.frames_ok


class Debouncer:
    """Suppresses pedal transitions shorter than the debounce window.

    Frame-driven: a new bitmask is accepted at the first frame showing it
    held for at least debounce_ms. The accepted timestamp is that frame's
    arrival time. Returning to the accepted value cancels the candidate.
    """

    def __init__(self, debounce_ms: float, initial_bitmask: int = 0, now_ms: float = 0.0):
        if debounce_ms < 0.0:
            raise ValueError("debounce_ms must be >= 0")
        self.debounce_ms = debounce_ms
        self._accepted = initial_bitmask
        self._accepted_at = now_ms
        self._candidate: int | None = None
        self._candidate_since = 0.0

    @property
    def accepted_bitmask(self) -> int:
        return self._accepted

    def state(self) -> PedalState:
        return pedal_state_from_bitmask(self._accepted, self._accepted_at)

    def feed(self, bitmask: int, t_ms: float) -> PedalState | None:
        """Process one raw frame; returns the newly accepted state, if any."""
        if bitmask == self._accepted:
            self._candidate = None
            return None
        if self._candidate != bitmask:
            self._candidate = bitmask
            self._candidate_since = t_ms
        if t_ms - self._candidate_since >= self.debounce_ms:
            self._accepted = bitmask
            self._accepted_at = t_ms
            self._candidate = None
            return pedal_state_from_bitmask(bitmask, t_ms)
        return None


def pedals_to_velocity(state: PedalState, cfg: PedalConfig) -> BaseVelocity:
    """Exact pedal-combination truth table; anything unlisted is a safe stop."""
    v, w = cfg.v_lin, cfg.omega_turn
    table = {
        (False, False, False, False): (0.0, 0.0, 0.0),
        (True, False, False, False): (v, 0.0, 0.0),    # forward
        (False, True, False, False): (-v, 0.0, 0.0),   # backward
        (False, False, True, False): (0.0, v, 0.0),    # strafe left
        (False, False, False, True): (0.0, -v, 0.0),   # strafe right
        (True, False, True, False): (0.0, 0.0, w),     # rotate CCW
        (True, False, False, True): (0.0, 0.0, -w),    # rotate CW
    }
    key = (state.forward, state.backward, state.left, state.right)
    vx, vy, omega = table.get(key, (0.0, 0.0, 0.0))
    return BaseVelocity(vx=vx, vy=vy, omega=omega)
