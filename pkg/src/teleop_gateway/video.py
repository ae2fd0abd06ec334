"""Video feedback pipeline: orientation fix, resolution cap, pacing, wire format.

Frames leave the simulator as raw 24-bit RGB; this module rotates portrait
frames to landscape, scales anything above the 1920x1080 cap by one uniform
factor (never upscales), throttles delivery to a target rate keeping only
the newest frame, and serializes frames for the wire as an 8-byte header
(magic "XLFR" + big-endian payload length) followed by a JPEG payload.
"""

from __future__ import annotations

import io
import struct
from dataclasses import dataclass
from typing import Iterable, Iterator

import numpy as np
from PIL import Image

from .errors import FramingError, InvalidFrameError

PORTRAIT = "portrait"
LANDSCAPE = "landscape"

MAX_WIDTH = 1920
MAX_HEIGHT = 1080

VIDEO_MAGIC = b"XLFR"
VIDEO_HEADER_LEN = 8

DEFAULT_JPEG_QUALITY = 80


@dataclass(frozen=True)
class VideoFrame:
    """One raw RGB frame, row-major, top-left origin."""

    width: int
    height: int
    pixels: bytes
    source_orientation: str = LANDSCAPE
    timestamp_ms: float = 0.0

    def __post_init__(self):
        if self.source_orientation not in (PORTRAIT, LANDSCAPE):
            raise InvalidFrameError(f"unknown orientation {self.source_orientation!r}")
        if len(self.pixels) != self.width * self.height * 3:
            raise InvalidFrameError(
                f"buffer is {len(self.pixels)} bytes, expected "
                f"{self.width}x{self.height}x3 = {self.width * self.height * 3}"
            )

    def to_array(self) -> np.ndarray:
        return np.frombuffer(self.pixels, dtype=np.uint8).reshape(self.height, self.width, 3)


def _nearest_scale(arr: np.ndarray, out_w: int, out_h: int) -> np.ndarray:
    in_h, in_w = arr.shape[:2]
    yi = (np.arange(out_h) * in_h) // out_h
    xi = (np.arange(out_w) * in_w) // out_w
    return arr[yi][:, xi]


def prepare_frame(
    frame: VideoFrame,
    max_w: int = MAX_WIDTH,
    max_h: int = MAX_HEIGHT,
    rotate_clockwise: bool = True,
) -> VideoFrame:
    """Rotate portrait frames to landscape, then fit under the resolution cap.

    Scaling uses a single uniform factor (aspect preserved to within 1 px of
    rounding) and nearest-neighbor sampling so results are byte-exact and
    idempotent. Frames already landscape and under the cap pass through
    unchanged.
    """
    if frame.width <= 0 or frame.height <= 0:
        raise InvalidFrameError("zero-dimension frame")

    arr = frame.to_array()
    if frame.source_orientation == PORTRAIT:
        arr = np.rot90(arr, k=-1 if rotate_clockwise else 1)

    h, w = arr.shape[:2]
    if w > max_w or h > max_h:
        factor = min(max_w / w, max_h / h)
        out_w = max(1, round(w * factor))
        out_h = max(1, round(h * factor))
        arr = _nearest_scale(arr, out_w, out_h)
        h, w = out_h, out_w

    if frame.source_orientation == LANDSCAPE and w == frame.width and h == frame.height:
        return frame
    return VideoFrame(
        width=w,
        height=h,
        pixels=np.ascontiguousarray(arr).tobytes(),
        source_orientation=LANDSCAPE,
        timestamp_ms=frame.timestamp_ms,
    )


class FramePacer:
    """Latest-wins frame gate bounding output rate to target_fps.

    Producers call submit() as fast as they like; poll(now_ms) returns the
    newest unsent frame once per rate slot and never an older frame after a
    newer one.
    """

    def __init__(self, target_fps: float):
        if target_fps <= 0.0:
            raise ValueError("target_fps must be positive")
        self.interval_ms = 1000.0 / target_fps
        self._latest: VideoFrame | None = None
        self._next_due_ms: float | None = None

    def submit(self, frame: VideoFrame) -> None:
        self._latest = frame

    def poll(self, now_ms: float) -> VideoFrame | None:
        if self._latest is None:
            return None
        # 1 ns tolerance so exact-slot inputs are not missed to float noise
        if self._next_due_ms is not None and now_ms < self._next_due_ms - 1e-6:
            return None
        frame = self._latest
        self._latest = None
        self._next_due_ms = now_ms + self.interval_ms
        return frame


def pace_frames(
    timed_frames: Iterable[tuple[float, VideoFrame]], target_fps: float
) -> Iterator[tuple[float, VideoFrame]]:
    """Throttle a (timestamp_ms, frame) stream to at most target_fps.

    Frames arriving between output slots are dropped in favor of the newest
    one, so the client always sees the most recent image.
    """
    pacer = FramePacer(target_fps)
    for t_ms, frame in timed_frames:
        pacer.submit(frame)
        out = pacer.poll(t_ms)
        if out is not None:
            yield t_ms, out


def encode_jpeg(frame: VideoFrame, quality: int = DEFAULT_JPEG_QUALITY) -> bytes:
    buf = io.BytesIO()
    Image.fromarray(frame.to_array()).save(buf, format="JPEG", quality=quality)
    return buf.getvalue()


def encode_frame_message(jpeg_payload: bytes) -> bytes:
    """Wrap a JPEG payload in the wire header."""
    return VIDEO_MAGIC + struct.pack(">I", len(jpeg_payload)) + jpeg_payload


def decode_frame_message(message: bytes) -> bytes:
    """Validate a wire message and return the JPEG payload."""
    if len(message) < VIDEO_HEADER_LEN:
        raise FramingError(f"message shorter than header: {len(message)} bytes")
    if message[:4] != VIDEO_MAGIC:
        raise FramingError(f"bad magic {message[:4]!r}")
    (length,) = struct.unpack(">I", message[4:8])
    payload = message[8:]
    if len(payload) != length:
        raise FramingError(f"payload length {len(payload)} != header length {length}")
    return payload
