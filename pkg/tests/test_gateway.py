import io
import json
import ssl
import time

import pytest
from fastapi.testclient import TestClient
from PIL import Image
from starlette.websockets import WebSocketDisconnect

from teleop_gateway.clock import VirtualClock
from teleop_gateway.errors import InvalidScriptError, StartupError
from teleop_gateway.fusion import ModalityHub
from teleop_gateway.gateway.app import build_gateway
from teleop_gateway.gateway.config import (
    GatewayConfig,
    apply_overrides,
    config_from_dict,
    load_config,
)
from teleop_gateway.gateway.sources import (
    KeyboardTeleop,
    ScriptedPedalSource,
    SimulatedLeaderSource,
)
from teleop_gateway.gateway.tls import generate_self_signed
from teleop_gateway.video import decode_frame_message


def wait_for(predicate, timeout=3.0, interval=0.02):
    deadline = time.time() + timeout
    while time.time() < deadline:
        if predicate():
            return True
        time.sleep(interval)
    return False


def orientation_msg(yaw, seq, roll=0.0, pitch=0.0):
    return json.dumps({"roll": roll, "pitch": pitch, "yaw": yaw, "seq": seq})


def head_of(client):
    # None until the first tick has produced a command
    return client.get("/api/status").json().get("head") or {}


def base_of(client):
    return client.get("/api/status").json().get("base") or {}


@pytest.fixture()
def client():
    cfg = GatewayConfig(frame_width=96, frame_height=128, video_fps=30.0)
    gateway, app = build_gateway(cfg)
    with TestClient(app) as c:
        c.gateway = gateway
        yield c


class TestConfig:
    def test_defaults_load(self):
        cfg = config_from_dict({})
        assert cfg.port == 8443 and cfg.mode == "sim"

    def test_yaml_file_round_trip(self, tmp_path):
        path = tmp_path / "gw.yaml"
        path.write_text(
            "port: 9000\n"
            "mode: sim\n"
            "pedals:\n  v_lin: 0.7\n  omega_turn: 1.1\n"
            "fusion:\n  pedal_stale_ms: 300\n"
            "geometry:\n  wheel_radius: 0.04\n"
        )
        cfg = load_config(path)
        assert cfg.port == 9000
        assert cfg.pedals.v_lin == 0.7
        assert cfg.fusion.pedal_stale_ms == 300
        assert cfg.geometry.wheel_radius == 0.04

    def test_unknown_keys_fail_loudly(self, tmp_path):
        path = tmp_path / "gw.yaml"
        path.write_text("prot: 9000\n")
        with pytest.raises(StartupError):
            load_config(path)
        with pytest.raises(StartupError):
            config_from_dict({"pedals": {"vlin": 1}})

    def test_tls_required_for_serving(self):
        cfg = GatewayConfig()
        with pytest.raises(StartupError):
            cfg.validate_for_serving()
        cfg.self_signed = True
        cfg.validate_for_serving()

    def test_serial_source_is_a_seam_not_a_driver(self):
        cfg = GatewayConfig(self_signed=True, pedal_source="serial:/dev/ttyUSB0")
        with pytest.raises(StartupError):
            cfg.validate_for_serving()

    def test_cli_overrides(self):
        cfg = apply_overrides(GatewayConfig(), port=1234, mode=None)
        assert cfg.port == 1234
        assert cfg.mode == "sim"


class TestTls:
    def test_self_signed_material_loads(self, tmp_path):
        cert, key = generate_self_signed(tmp_path)
        ctx = ssl.SSLContext(ssl.PROTOCOL_TLS_SERVER)
        ctx.load_cert_chain(certfile=cert, keyfile=key)


class TestStatusEndpoint:
    def test_fresh_gateway_all_disconnected_loop_ticking(self, client):
        assert wait_for(lambda: client.get("/api/status").json()["tick"]["count"] > 3)
        body = client.get("/api/status").json()
        assert all(not m["connected"] for m in body["modalities"])
        assert all(m["stale"] for m in body["modalities"])
        assert body["safety"] == "base_halted"  # no pedal stream yet
        assert body["base"] == {"vx": 0.0, "vy": 0.0, "omega": 0.0}

    def test_index_serves_placeholder_without_client_dir(self, client):
        page = client.get("/")
        assert page.status_code == 200
        assert "teleop gateway" in page.text

    def test_index_serves_built_client(self, tmp_path):
        (tmp_path / "index.html").write_text("<html>operator</html>")
        cfg = GatewayConfig(client_dir=str(tmp_path))
        _gw, app = build_gateway(cfg)
        with TestClient(app) as c:
            assert "operator" in c.get("/").text


class TestOrientationSession:
    def test_head_calibrates_and_tracks(self, client):
        with client.websocket_connect("/ws/orientation") as ws:
            ws.send_text(orientation_msg(yaw=40.0, seq=1))
            assert wait_for(
                lambda: head_of(client) == {"yaw": 0.0, "roll": 0.0}
            )
            ws.send_text(orientation_msg(yaw=52.5, seq=2))
            assert wait_for(
                lambda: head_of(client).get("yaw") == pytest.approx(12.5)
            )
            by_name = {
                m["modality"]: m for m in client.get("/api/status").json()["modalities"]
            }
            assert by_name["head"]["connected"] and not by_name["head"]["stale"]
            assert by_name["client"]["connected"]

    def test_recalibrate_re_zeros_unchanged_pose(self, client):
        with client.websocket_connect("/ws/orientation") as ws:
            ws.send_text(orientation_msg(yaw=10.0, seq=1))
            ws.send_text(orientation_msg(yaw=30.0, seq=2))
            assert wait_for(
                lambda: head_of(client).get("yaw") == pytest.approx(20.0)
            )
            resp = client.post("/api/recalibrate")
            assert resp.json()["ok"] and resp.json()["active_session"]
            ws.send_text(orientation_msg(yaw=30.0, seq=3))  # unchanged phone pose
            assert wait_for(
                lambda: head_of(client) == {"yaw": 0.0, "roll": 0.0}
            )

    def test_second_session_rejected_busy(self, client):
        with client.websocket_connect("/ws/orientation") as ws:
            ws.send_text(orientation_msg(yaw=0.0, seq=1))
            with pytest.raises(WebSocketDisconnect) as err:
                with client.websocket_connect("/ws/orientation") as second:
                    second.receive_text()
            assert err.value.code == 1013

    def test_reconnect_recalibrates(self, client):
        with client.websocket_connect("/ws/orientation") as ws:
            ws.send_text(orientation_msg(yaw=10.0, seq=1))
            ws.send_text(orientation_msg(yaw=25.0, seq=2))
            assert wait_for(
                lambda: head_of(client).get("yaw") == pytest.approx(15.0)
            )
        # drop and reconnect: seq restarts, first sample re-zeros the head
        with client.websocket_connect("/ws/orientation") as ws:
            ws.send_text(orientation_msg(yaw=25.0, seq=1))
            assert wait_for(
                lambda: head_of(client) == {"yaw": 0.0, "roll": 0.0}
            )

    def test_malformed_messages_do_not_kill_session(self, client):
        with client.websocket_connect("/ws/orientation") as ws:
            ws.send_text("definitely not json")
            ws.send_text(orientation_msg(yaw=999.0, seq=1))  # wraps, calibrates
            ws.send_text(orientation_msg(yaw=-0.5, seq=0))   # seq regression dropped
            ws.send_text(orientation_msg(yaw=999.0, seq=2))
            assert wait_for(
                lambda: head_of(client) == {"yaw": 0.0, "roll": 0.0}
            )

    def test_disconnect_marks_head_disconnected_without_stopping_loop(self, client):
        with client.websocket_connect("/ws/orientation") as ws:
            ws.send_text(orientation_msg(yaw=0.0, seq=1))
            assert wait_for(
                lambda: {
                    m["modality"]: m["connected"]
                    for m in client.get("/api/status").json()["modalities"]
                }["head"]
            )
        assert wait_for(
            lambda: not {
                m["modality"]: m["connected"]
                for m in client.get("/api/status").json()["modalities"]
            }["head"]
        )
        before = client.get("/api/status").json()["tick"]["count"]
        assert wait_for(lambda: client.get("/api/status").json()["tick"]["count"] > before)


class TestVideoStream:
    def test_frames_are_valid_capped_jpeg(self, client):
        with client.websocket_connect("/ws/video") as ws:
            message = ws.receive_bytes()
        payload = decode_frame_message(message)
        img = Image.open(io.BytesIO(payload))
        # 96x128 portrait sim frame rotates to 128x96 landscape
        assert img.size == (128, 96)
        assert img.size[0] <= 1920 and img.size[1] <= 1080

    def test_video_counts_as_client_liveness(self, client):
        with client.websocket_connect("/ws/video") as ws:
            ws.receive_bytes()
            by_name = {
                m["modality"]: m for m in client.get("/api/status").json()["modalities"]
            }
            assert not by_name["client"]["stale"]


class TestSettingsEndpoint:
    def test_get_settings(self, client):
        body = client.get("/api/settings").json()
        assert body["pedals"]["v_lin"] == 0.5
        assert body["fusion"]["pedal_stale_ms"] == 200.0

    def test_put_settings_applies_live(self, client):
        resp = client.put(
            "/api/settings",
            json={"pedals": {"v_lin": 0.9}, "fusion": {"pedal_stale_ms": 450.0}},
        )
        assert resp.status_code == 200
        assert client.gateway.loop.pedal_cfg.v_lin == 0.9
        assert client.gateway.loop.cfg.pedal_stale_ms == 450.0

    def test_put_rejects_bad_values(self, client):
        assert client.put("/api/settings", json={"pedals": {"v_lin": -5}}).status_code == 422
        assert client.put("/api/settings", json={"bogus": {}}).status_code == 422
        assert client.put("/api/settings", json={"fusion": {"rate_hz": "x"}}).status_code == 422


class TestScriptedPedalIntegration:
    def test_pedal_script_drives_base(self, tmp_path):
        script = tmp_path / "script.json"
        script.write_text(json.dumps([{"t_ms": 0, "pedals": ["forward"]}]))
        cfg = GatewayConfig(
            pedal_source="simulated",
            pedal_script=str(script),
            frame_width=64,
            frame_height=64,
        )
        gateway, app = build_gateway(cfg)
        with TestClient(app) as c:
            assert wait_for(lambda: base_of(c).get("vx") == 0.5)
            body = c.get("/api/status").json()
            assert body["safety"] == "nominal"
            by_name = {m["modality"]: m for m in body["modalities"]}
            assert by_name["pedals"]["connected"] and not by_name["pedals"]["stale"]

    def test_empty_script_keepalives_mark_pedals_fresh(self):
        cfg = GatewayConfig(pedal_source="simulated", frame_width=64, frame_height=64)
        gateway, app = build_gateway(cfg)
        with TestClient(app) as c:
            assert wait_for(
                lambda: not {
                    m["modality"]: m for m in c.get("/api/status").json()["modalities"]
                }["pedals"]["stale"]
            )
            assert wait_for(lambda: base_of(c) == {"vx": 0.0, "vy": 0.0, "omega": 0.0})
            assert wait_for(lambda: c.get("/api/status").json()["safety"] == "nominal")

    def test_simulated_leaders_feed_arms(self):
        cfg = GatewayConfig(
            left_leader_source="simulated",
            right_leader_source="simulated",
            frame_width=64,
            frame_height=64,
        )
        gateway, app = build_gateway(cfg)
        with TestClient(app) as c:
            assert wait_for(
                lambda: all(
                    not m["stale"]
                    for m in c.get("/api/status").json()["modalities"]
                    if m["modality"] in ("left_leader", "right_leader")
                )
            )


class TestRecordingIntegration:
    def test_gateway_records_episode(self, tmp_path):
        cfg = GatewayConfig(record_dir=str(tmp_path), frame_width=64, frame_height=64)
        gateway, app = build_gateway(cfg)
        with TestClient(app) as c:
            assert wait_for(lambda: c.get("/api/status").json()["tick"]["count"] > 40)
            status = c.get("/api/status").json()
            assert status["recording"]["path"].endswith(".jsonl")
        episodes = list(tmp_path.glob("episode_*.jsonl"))
        assert len(episodes) == 1
        from teleop_gateway.recorder import read_episode

        header, ticks, footer = read_episode(episodes[0])
        assert footer is not None and footer["ticks"] == len(ticks) > 0
        assert [t["tick"] for t in ticks] == list(range(1, len(ticks) + 1))
        # shutdown always lands one final zero-base command in the episode
        last = ticks[-1]
        assert (last["base_vx"], last["base_vy"], last["base_omega"]) == (0.0, 0.0, 0.0)
        assert last["safety"] == "frozen"


class TestScriptedSourceUnit:
    def test_keepalive_grid(self):
        src = ScriptedPedalSource()
        frames = src.frames_between(0.0, 100.0)
        assert [t for t, _ in frames] == [20.0, 40.0, 60.0, 80.0, 100.0]
        assert all(f == bytes([0xA5, 0x00, 0xA5]) for _, f in frames)

    def test_event_frame_emitted_at_exact_time(self):
        src = ScriptedPedalSource([{"t_ms": 25, "pedals": ["forward"]}])
        frames = dict(src.frames_between(0.0, 60.0))
        assert frames[25.0] == bytes([0xA5, 0x01, 0xA4])
        assert frames[40.0] == bytes([0xA5, 0x01, 0xA4])
        assert frames[20.0] == bytes([0xA5, 0x00, 0xA5])

    def test_corrupt_injection(self):
        src = ScriptedPedalSource([{"t_ms": 30, "corrupt": True}])
        frames = dict(src.frames_between(0.0, 60.0))
        bad = frames[30.0]
        assert bad[:2] == bytes([0xA5, 0x00]) and bad[2] != 0xA5
        # surrounding keepalives unaffected
        assert frames[40.0] == bytes([0xA5, 0x00, 0xA5])

    def test_unordered_script_rejected(self):
        with pytest.raises(InvalidScriptError):
            ScriptedPedalSource([{"t_ms": 50, "pedals": []}, {"t_ms": 10, "pedals": []}])

    def test_unknown_pedal_rejected(self):
        with pytest.raises(InvalidScriptError):
            ScriptedPedalSource([{"t_ms": 0, "pedals": ["sideways"]}])

    def test_leader_source_emits_decodable_frames(self):
        from teleop_gateway.arms import decode_leader_frame

        src = SimulatedLeaderSource("left")
        frames = src.frames_between(0.0, 210.0)
        assert len(frames) == 6
        vec = decode_leader_frame(frames[0][1])
        assert vec.side == "left"


class TestKeyboardTeleop:
    def make(self):
        clock = VirtualClock()
        hub = ModalityHub()
        kb = KeyboardTeleop(hub, clock, step_duration_ms=200.0, head_step_deg=5.0)
        return kb, hub, clock

    def test_base_key_pulses_pedals(self):
        kb, hub, clock = self.make()
        assert kb.press("w")
        snap = hub.snapshot()
        assert snap.pedals.value.forward
        clock.set_ms(100.0)
        kb.poll(100.0)
        assert hub.snapshot().pedals.value.forward  # still held
        clock.set_ms(201.0)
        kb.poll(201.0)
        assert not hub.snapshot().pedals.value.forward  # released

    def test_rotation_keys_map_to_pedal_combos(self):
        kb, hub, clock = self.make()
        kb.press("q")
        state = hub.snapshot().pedals.value
        assert state.forward and state.left and not state.right

    def test_head_steps_accumulate_and_clamp(self):
        kb, hub, clock = self.make()
        for _ in range(17):
            kb.press("j")  # 17 * 5 = 85
        assert hub.snapshot().head.value.yaw == 85.0
        kb.press("j")
        assert hub.snapshot().head.value.yaw == 90.0
        kb.press("j")
        assert hub.snapshot().head.value.yaw == 90.0  # clamped

    def test_unmapped_key_ignored(self):
        kb, hub, clock = self.make()
        assert not kb.press("z")
        assert hub.snapshot().pedals is None and hub.snapshot().head is None

    def test_forward_step_distance_in_sim(self):
        # one press commands v_lin for step_duration: 0.5 m/s * 0.2 s = 0.1 m,
        # quantized to the tick grid (integrated in the simulator)
        from harness import ScenarioRunner

        runner = ScenarioRunner()
        kb = KeyboardTeleop(runner.hub, runner.clock, step_duration_ms=200.0)
        runner.loop.add_pre_tick_hook(kb.poll)
        kb.press("w")
        runner.run(30)  # one second
        distance = runner.states[-1].x
        assert abs(distance - 0.1) <= 0.02
        # and the base is at rest again by the end of the second
        assert runner.commands[-1].base.vx == 0.0
