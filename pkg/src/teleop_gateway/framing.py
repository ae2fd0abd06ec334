"""Byte-stream framing shared by the pedal and leader-arm links.

Both links use fixed-length frames with a distinguishing header byte and a
trailing XOR checksum over all preceding bytes. The decoder tolerates
garbage between frames by scanning for the next header byte and drops
frames whose checksum fails without losing stream sync.
"""

from __future__ import annotations

from typing import Callable


def xor_checksum(data: bytes) -> int:
    c = 0
    for b in data:
        c ^= b
    return c


class FrameStreamDecoder:
    """Incremental scanner yielding checksum-valid fixed-length frames.

    An optional extra validity predicate lets protocols reject frames a
    compliant encoder can never produce (reserved bits, bad enum bytes);
    such frames resync one byte later exactly like checksum failures, so a
    coincidentally checksum-valid byte pattern cannot swallow the header of
    a real frame right behind it.
    """

    def __init__(self, header: int, frame_len: int, valid: Callable[[bytes], bool] | None = None):
        self.header = header
        self.frame_len = frame_len
        self.valid = valid
        self._buf = bytearray()
        self.frames_ok = 0
        self.frames_corrupt = 0
        self.bytes_skipped = 0

    def feed(self, data: bytes) -> list[bytes]:
        """Consume bytes, return every complete valid frame found so far."""
        self._buf.extend(data)
        frames: list[bytes] = []
        header = bytes([self.header])
        while True:
            start = self._buf.find(header)
            if start < 0:
                self.bytes_skipped += len(self._buf)
                self._buf.clear()
                return frames
            if start > 0:
                self.bytes_skipped += start
                del self._buf[:start]
            if len(self._buf) < self.frame_len:
                return frames
            candidate = bytes(self._buf[: self.frame_len])
            checksum_ok = xor_checksum(candidate[:-1]) == candidate[-1]
            if checksum_ok and (self.valid is None or self.valid(candidate)):
                frames.append(candidate)
                del self._buf[: self.frame_len]
                self.frames_ok += 1
            else:
                # False header or corrupted payload: rescan one byte later so a
                # real frame hiding inside the garbage is still found.
                self.frames_corrupt += 1
                del self._buf[:1]
