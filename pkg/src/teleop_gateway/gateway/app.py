"""The network front door: HTTPS endpoints, websocket streams, lifecycle.

One operator session at a time feeds head orientation over
/ws/orientation; /ws/video streams framed JPEG feedback the other way.
The fusion loop runs in its own thread and is never blocked by any
session handler: all handoff goes through latest-value snapshots.
"""

from __future__ import annotations

import asyncio
import contextlib
import logging
import threading
import time
from dataclasses import asdict, replace
from pathlib import Path

from fastapi import FastAPI, Request, WebSocket, WebSocketDisconnect
from fastapi.responses import FileResponse, HTMLResponse, JSONResponse
from fastapi.staticfiles import StaticFiles

from .. import __version__
from ..arms import LeaderStreamDecoder
from ..clock import MonotonicClock
from ..errors import StartupError
from ..fusion import FusionLoop, ModalityHub
from ..head import HeadTracker
from ..model import (
    MODALITY_CLIENT,
    MODALITY_HEAD,
    MODALITY_LEFT_LEADER,
    MODALITY_PEDALS,
    MODALITY_RIGHT_LEADER,
    SIDE_LEFT,
    SIDE_RIGHT,
    UnifiedCommand,
)
from ..pedals import Debouncer, PedalStreamDecoder
from ..recorder import EpisodeWriter, RecorderSink
from ..sim import RobotState, Simulator, render_synthetic_frame
from ..video import encode_frame_message, encode_jpeg, prepare_frame
from .config import GatewayConfig, SOURCE_SIMULATED
from .sources import KeyboardTeleop, ScriptedPedalSource, SimulatedLeaderSource

logger = logging.getLogger(__name__)

_FEED_POLL_S = 0.005

_PLACEHOLDER_PAGE = """<!doctype html>
<html><head><title>teleop gateway</title></head>
<body style="font-family: sans-serif; background: #111; color: #eee">
<h1>teleop gateway</h1>
<p>No operator client assets configured. Build the frontend and point
<code>client_dir</code> (or <code>--client-dir</code>) at its dist/ folder.</p>
<p>API: <a href="/api/status" style="color:#8cf">/api/status</a></p>
</body></html>"""


class Gateway:
    """Owns the control loop, simulator, hub, recorder, and input sources."""

    def __init__(self, cfg: GatewayConfig, clock=None):
        self.cfg = cfg
        self.clock = clock or MonotonicClock()
        self.hub = ModalityHub()
        self.sim = Simulator(cfg.sim_config())
        self.loop = FusionLoop(
            cfg.fusion,
            self.hub,
            self.clock,
            pedal_cfg=cfg.pedals,
        )
        self._latest_lock = threading.Lock()
        self._latest_cmd: UnifiedCommand | None = None
        self._latest_state: RobotState = self.sim.state

        self.recorder: RecorderSink | None = None
        if cfg.record_dir:
            record_dir = Path(cfg.record_dir)
            record_dir.mkdir(parents=True, exist_ok=True)
            path = record_dir / f"episode_{int(time.time() * 1000)}.jsonl"
            writer = EpisodeWriter(path, self.sim.state, self.sim.cfg)
            self.recorder = RecorderSink(writer)
            logger.info("recording episode to %s", path)

        self.keyboard: KeyboardTeleop | None = None
        if cfg.keyboard:
            self.keyboard = KeyboardTeleop(self.hub, self.clock)
            self.loop.add_pre_tick_hook(self.keyboard.poll)

        self._threads: list[threading.Thread] = []
        self._stop_feeds = threading.Event()
        self._orientation_lock = threading.Lock()
        self._orientation_busy = False
        self.head_tracker: HeadTracker | None = None

    # -- lifecycle ---------------------------------------------------------

    def start(self) -> None:
        loop_thread = threading.Thread(
            target=self.loop.run, args=(self._on_command,), name="fusion-loop", daemon=True
        )
        loop_thread.start()
        self._threads.append(loop_thread)

        if self.cfg.pedal_source == SOURCE_SIMULATED:
            script = (
                ScriptedPedalSource.from_file(self.cfg.pedal_script)
                if self.cfg.pedal_script
                else ScriptedPedalSource()
            )
            t = threading.Thread(
                target=self._pedal_feed, args=(script,), name="pedal-feed", daemon=True
            )
            t.start()
            self._threads.append(t)

        for side, source_cfg, modality in (
            (SIDE_LEFT, self.cfg.left_leader_source, MODALITY_LEFT_LEADER),
            (SIDE_RIGHT, self.cfg.right_leader_source, MODALITY_RIGHT_LEADER),
        ):
            if source_cfg == SOURCE_SIMULATED:
                src = SimulatedLeaderSource(side)
                t = threading.Thread(
                    target=self._leader_feed,
                    args=(src, side, modality),
                    name=f"{side}-leader-feed",
                    daemon=True,
                )
                t.start()
                self._threads.append(t)

    def shutdown(self) -> None:
        self._stop_feeds.set()
        self.loop.stop()
        for t in self._threads:
            t.join(timeout=5.0)
        if self.recorder is not None:
            self.recorder.close()

    # -- command sink ------------------------------------------------------

    def _on_command(self, cmd: UnifiedCommand) -> None:
        dt = 1.0 / self.cfg.fusion.rate_hz
        state = self.sim.apply(cmd, dt)
        with self._latest_lock:
            self._latest_cmd = cmd
            self._latest_state = state
        if self.recorder is not None:
            self.recorder.record(cmd, state, dt)

    def latest(self) -> tuple[UnifiedCommand | None, RobotState]:
        with self._latest_lock:
            return self._latest_cmd, self._latest_state

    # -- input feeds -------------------------------------------------------

    def _pedal_feed(self, source: ScriptedPedalSource) -> None:
        self.hub.set_connected(MODALITY_PEDALS, True)
        decoder = PedalStreamDecoder()
        debouncer = Debouncer(self.cfg.pedals.debounce_ms, now_ms=self.clock.now_ms())
        offset = self.clock.now_ms()
        rel_last = 0.0
        try:
            while not self._stop_feeds.is_set():
                time.sleep(_FEED_POLL_S)
                rel_now = self.clock.now_ms() - offset
                for t_rel, frame_bytes in source.frames_between(rel_last, rel_now):
                    t_abs = t_rel + offset
                    for frame in decoder.feed(frame_bytes):
                        accepted = debouncer.feed(frame.bitmask, t_abs)
                        if accepted is not None:
                            self.hub.set_pedals(accepted, t_abs)
                        else:
                            # keepalive with unchanged state still refreshes liveness
                            self.hub.set_pedals(
                                replace(debouncer.state(), timestamp_ms=t_abs), t_abs
                            )
                rel_last = rel_now
        finally:
            self.hub.set_connected(MODALITY_PEDALS, False)

    def _leader_feed(self, source: SimulatedLeaderSource, side: str, modality: str) -> None:
        self.hub.set_connected(modality, True)
        decoder = LeaderStreamDecoder()
        offset = self.clock.now_ms()
        rel_last = 0.0
        try:
            while not self._stop_feeds.is_set():
                time.sleep(_FEED_POLL_S)
                rel_now = self.clock.now_ms() - offset
                for t_rel, frame_bytes in source.frames_between(rel_last, rel_now):
                    t_abs = t_rel + offset
                    for vec in decoder.feed(frame_bytes):
                        self.hub.set_leader(side, vec, t_abs)
                rel_last = rel_now
        finally:
            self.hub.set_connected(modality, False)

    # -- session management --------------------------------------------------

    def claim_orientation_session(self) -> bool:
        with self._orientation_lock:
            if self._orientation_busy:
                return False
            self._orientation_busy = True
            return True

    def release_orientation_session(self) -> None:
        with self._orientation_lock:
            self._orientation_busy = False
            self.head_tracker = None

    def request_recalibration(self) -> bool:
        """Ask the active session to re-zero on its next sample.

        With no session active there is nothing to do: a fresh session
        calibrates on its first sample anyway.
        """
        with self._orientation_lock:
            if self.head_tracker is not None:
                self.head_tracker.request_recalibration()
                return True
            return False

    def attach_tracker(self, tracker: HeadTracker) -> None:
        with self._orientation_lock:
            self.head_tracker = tracker

    # -- status --------------------------------------------------------------

    def status(self) -> dict:
        now = self.clock.now_ms()
        cmd, _state = self.latest()
        stats = self.loop.stats
        return {
            "version": __version__,
            "mode": self.cfg.mode,
            "modalities": [asdict(m) for m in self.hub.statuses(now, self.loop.cfg)],
            "tick": {
                "count": stats.count,
                "rate_hz": stats.mean_rate_hz(),
                "jitter": stats.jitter_summary(),
            },
            "safety": cmd.safety if cmd else None,
            "head": {"yaw": cmd.head.yaw, "roll": cmd.head.roll} if cmd else None,
            "base": (
                {"vx": cmd.base.vx, "vy": cmd.base.vy, "omega": cmd.base.omega}
                if cmd
                else None
            ),
            "recording": (
                {
                    "path": str(self.recorder.writer.path),
                    "ticks": self.recorder.writer.ticks_written,
                    "dropped": self.recorder.writer.dropped,
                }
                if self.recorder is not None
                else None
            ),
            "fault": repr(self.loop.fault) if self.loop.fault else None,
        }

    def settings(self) -> dict:
        fusion = self.loop.cfg
        pedals = self.loop.pedal_cfg
        return {
            "pedals": {
                "v_lin": pedals.v_lin,
                "omega_turn": pedals.omega_turn,
                "debounce_ms": pedals.debounce_ms,
            },
            "fusion": {
                "pedal_stale_ms": fusion.pedal_stale_ms,
                "head_stale_ms": fusion.head_stale_ms,
                "arm_stale_ms": fusion.arm_stale_ms,
                "client_stale_ms": fusion.client_stale_ms,
                "arm_max_step_deg": fusion.arm_max_step_deg,
            },
        }

    def update_settings(self, body: dict) -> dict:
        """Apply a partial settings update; raises ValueError on bad values."""
        allowed = {"pedals", "fusion"}
        unknown = set(body) - allowed
        if unknown:
            raise ValueError(f"unknown settings sections: {sorted(unknown)}")
        new_pedals = replace(self.loop.pedal_cfg, **body.get("pedals", {}))
        new_fusion = replace(self.loop.cfg, **body.get("fusion", {}))
        # whole-object swap: the loop reads these once per tick
        self.loop.pedal_cfg = new_pedals
        self.loop.cfg = new_fusion
        return self.settings()


def create_app(gateway: Gateway) -> FastAPI:
    cfg = gateway.cfg

    @contextlib.asynccontextmanager
    async def lifespan(_app: FastAPI):
        gateway.start()
        try:
            yield
        finally:
            gateway.shutdown()

    app = FastAPI(title="teleop-gateway", version=__version__, lifespan=lifespan)
    app.state.gateway = gateway

    client_dir = Path(cfg.client_dir) if cfg.client_dir else None
    if client_dir and client_dir.is_dir():
        app.mount("/static", StaticFiles(directory=str(client_dir)), name="static")

    @app.get("/")
    async def index():
        if client_dir and (client_dir / "index.html").is_file():
            return FileResponse(client_dir / "index.html")
        return HTMLResponse(_PLACEHOLDER_PAGE)

    @app.get("/api/status")
    async def api_status():
        return gateway.status()

    @app.post("/api/recalibrate")
    async def api_recalibrate():
        active = gateway.request_recalibration()
        return {"ok": True, "active_session": active}

    @app.get("/api/settings")
    async def api_settings():
        return gateway.settings()

    @app.put("/api/settings")
    async def api_settings_put(request: Request):
        try:
            body = await request.json()
            if not isinstance(body, dict):
                raise ValueError("settings body must be a JSON object")
            updated = gateway.update_settings(body)
        except (ValueError, TypeError) as exc:
            return JSONResponse(status_code=422, content={"error": str(exc)})
        return updated

    @app.websocket("/ws/orientation")
    async def ws_orientation(ws: WebSocket):
        await ws.accept()
        if not gateway.claim_orientation_session():
            # one robot, one operator: a second session is turned away
            await ws.close(code=1013, reason="another operator session is active")
            return
        tracker = HeadTracker(cfg.head)
        gateway.attach_tracker(tracker)
        gateway.hub.set_connected(MODALITY_HEAD, True)
        gateway.hub.set_connected(MODALITY_CLIENT, True)
        logger.info("orientation session opened")
        try:
            while True:
                text = await ws.receive_text()
                now = gateway.clock.now_ms()
                gateway.hub.touch_client(now)
                cmd = tracker.ingest(text, now)
                if cmd is not None:
                    gateway.hub.set_head(cmd, now)
        except WebSocketDisconnect:
            pass
        finally:
            gateway.hub.set_connected(MODALITY_HEAD, False)
            gateway.hub.set_connected(MODALITY_CLIENT, False)
            gateway.release_orientation_session()
            logger.info(
                "orientation session closed (malformed=%d, out_of_order=%d)",
                tracker.dropped_malformed,
                tracker.dropped_out_of_order,
            )

    @app.websocket("/ws/video")
    async def ws_video(ws: WebSocket):
        await ws.accept()
        gateway.hub.touch_client(gateway.clock.now_ms())
        interval = 1.0 / cfg.video_fps
        try:
            while True:
                _cmd, state = gateway.latest()
                frame = render_synthetic_frame(
                    state, cfg.frame_width, cfg.frame_height, gateway.sim.cfg
                )
                prepared = prepare_frame(frame)
                payload = encode_frame_message(encode_jpeg(prepared, cfg.jpeg_quality))
                await ws.send_bytes(payload)
                gateway.hub.touch_client(gateway.clock.now_ms())
                await asyncio.sleep(interval)
        except (WebSocketDisconnect, RuntimeError):
            pass

    return app


def build_gateway(cfg: GatewayConfig, clock=None) -> tuple[Gateway, FastAPI]:
    gateway = Gateway(cfg, clock=clock)
    return gateway, create_app(gateway)


def serve(cfg: GatewayConfig, prebuilt: tuple[Gateway, FastAPI] | None = None) -> None:
    """Validate config, build the app, and run the TLS listener (blocking)."""
    import uvicorn

    cfg.validate_for_serving()
    cert, key = cfg.tls_cert, cfg.tls_key
    if cfg.self_signed:
        import tempfile

        from .tls import generate_self_signed

        cert_path, key_path = generate_self_signed(
            Path(tempfile.mkdtemp(prefix="teleop-tls-"))
        )
        cert, key = str(cert_path), str(key_path)
        logger.warning("serving with a self-signed certificate (development only)")

    _gateway, app = prebuilt if prebuilt is not None else build_gateway(cfg)
    try:
        uvicorn.run(
            app,
            host=cfg.host,
            port=cfg.port,
            ssl_certfile=cert,
            ssl_keyfile=key,
            log_level="info",
        )
    except OSError as exc:
        raise StartupError(f"cannot bind {cfg.host}:{cfg.port}: {exc}") from exc
