"""Monotonic time sources.

All timing logic takes a clock object so tests can substitute a virtual
clock and stay deterministic.
"""

import time

# Sleep coarsely until this close to the deadline, then busy-wait; keeps
# wakeup error well under a millisecond at 30 Hz for a few percent of a core.
_SPIN_WINDOW_MS = 2.0


class MonotonicClock:
    """Milliseconds since construction; immune to wall-clock adjustments."""

    def __init__(self):
        self._t0 = time.monotonic()

    def now_ms(self) -> float:
        return (time.monotonic() - self._t0) * 1000.0

    def sleep_until_ms(self, deadline_ms: float) -> None:
        while True:
            remaining = deadline_ms - self.now_ms()
            if remaining <= 0.0:
                return
            if remaining > _SPIN_WINDOW_MS:
                time.sleep((remaining - _SPIN_WINDOW_MS) / 1000.0)


class VirtualClock:
    """Manually advanced clock for deterministic tests."""

    def __init__(self, start_ms: float = 0.0):
        self._now = float(start_ms)

    def now_ms(self) -> float:
        return self._now

    def advance(self, ms: float) -> None:
        if ms < 0:
            raise ValueError("virtual clock cannot go backwards")
        self._now += ms

    def set_ms(self, now_ms: float) -> None:
        if now_ms < self._now:
            raise ValueError("virtual clock cannot go backwards")
        self._now = float(now_ms)

    def sleep_until_ms(self, deadline_ms: float) -> None:
        if deadline_ms > self._now:
            self._now = deadline_ms
