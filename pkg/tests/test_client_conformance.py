"""Cross-checks the built operator client against the gateway's own parser.

Skipped when the frontend has not been built (frontend/dist missing) or
node is unavailable; `npm run build` in frontend/ produces the artifacts.
"""

import json
import shutil
import subprocess
from pathlib import Path

import pytest

from teleop_gateway.head import HeadTracker, parse_orientation_message
from teleop_gateway.video import encode_frame_message

REPO = Path(__file__).resolve().parents[1]
DIST = REPO / "frontend" / "dist"

pytestmark = pytest.mark.skipif(
    not (DIST / "protocol.js").exists() or shutil.which("node") is None,
    reason="operator client not built (run `npm run build` in frontend/)",
)


def run_node(script: str) -> str:
    out = subprocess.run(
        ["node", "--input-type=module", "-e", script],
        capture_output=True,
        text=True,
        timeout=30,
    )
    assert out.returncode == 0, out.stderr
    return out.stdout.strip()


def test_client_orientation_messages_satisfy_gateway_schema():
    script = f"""
import {{ buildOrientationMessage }} from '{(DIST / "protocol.js").as_uri()}';
const out = [];
for (let i = 1; i <= 25; i++) {{
    out.push(buildOrientationMessage(i * 3.5, -i, 350 + i * 7, i, 16.6 * i));
}}
console.log(JSON.stringify(out));
"""
    messages = json.loads(run_node(script))
    assert len(messages) == 25
    tracker = HeadTracker()
    for i, text in enumerate(messages, start=1):
        sample = parse_orientation_message(text, now_ms=float(i))
        assert sample.seq == i
        assert -180.0 < sample.yaw <= 180.0
        assert tracker.ingest(text, float(i)) is not None  # none dropped


def test_client_frame_parser_accepts_gateway_wire_format():
    payload = bytes([0xFF, 0xD8]) + bytes(range(64)) + bytes([0xFF, 0xD9])
    message = encode_frame_message(payload)
    script = f"""
import {{ parseFrameMessage }} from '{(DIST / "protocol.js").as_uri()}';
const wire = Uint8Array.from({list(message)});
const jpeg = parseFrameMessage(wire.buffer);
console.log(JSON.stringify(Array.from(jpeg)));
"""
    recovered = bytes(json.loads(run_node(script)))
    assert recovered == payload
