import json
import random

import pytest

from teleop_gateway.angles import wrap180
from teleop_gateway.errors import MalformedMessageError
from teleop_gateway.head import (
    HeadControlConfig,
    HeadTracker,
    PHONE_PITCH,
    calibrate,
    normalize,
    parse_orientation_message,
)
from teleop_gateway.model import CalibrationReference, OrientationSample


def sample(roll=0.0, pitch=0.0, yaw=0.0, t=0.0, seq=1):
    return OrientationSample(roll=roll, pitch=pitch, yaw=yaw, timestamp_ms=t, seq=seq)


def ref(roll0=0.0, pitch0=0.0, yaw0=0.0):
    return CalibrationReference(roll0=roll0, pitch0=pitch0, yaw0=yaw0, established_at_ms=0.0)


class TestParse:
    def test_zero_record(self):
        s = parse_orientation_message('{"roll":0,"pitch":0,"yaw":0,"seq":1}', now_ms=42.0)
        assert (s.roll, s.pitch, s.yaw, s.seq) == (0.0, 0.0, 0.0, 1)
        assert s.timestamp_ms == 42.0

    def test_wraps_angles(self):
        # yaw 190 lands at -170 per the wrap oracle
        s = parse_orientation_message('{"roll":10.5,"pitch":-3,"yaw":190,"seq":2}', 0.0)
        assert (s.roll, s.pitch, s.yaw) == (10.5, -3.0, -170.0)

    @pytest.mark.parametrize(
        "payload",
        [
            '{"roll":"x","pitch":0,"yaw":0,"seq":3}',
            '{"pitch":0,"yaw":0,"seq":3}',
            '{"roll":0,"pitch":0,"yaw":0}',
            '{"roll":0,"pitch":0,"yaw":0,"seq":-1}',
            '{"roll":0,"pitch":0,"yaw":0,"seq":1.5}',
            '{"roll":0,"pitch":0,"yaw":0,"seq":true}',
            '{"roll":NaN,"pitch":0,"yaw":0,"seq":1}',
            '{"roll":0,"pitch":0,"yaw":0,"seq":1,"t":"later"}',
            "not json at all",
            "[1,2,3]",
        ],
    )
    def test_rejects_malformed(self, payload):
        with pytest.raises(MalformedMessageError):
            parse_orientation_message(payload, 0.0)

    def test_optional_client_timestamp_ok(self):
        s = parse_orientation_message('{"roll":1,"pitch":2,"yaw":3,"seq":9,"t":123.4}', 0.0)
        assert s.seq == 9


class TestCalibrate:
    def test_copies_sample_angles(self):
        r = calibrate(sample(15.0, -40.0, 170.0, t=7.0))
        assert (r.roll0, r.pitch0, r.yaw0) == (15.0, -40.0, 170.0)
        assert r.established_at_ms == 7.0

    def test_zero_reference_property(self):
        rng = random.Random(7)
        for _ in range(200):
            s = sample(
                roll=rng.uniform(-180, 180),
                pitch=rng.uniform(-180, 180),
                yaw=rng.uniform(-180, 180),
            )
            cmd = normalize(s, calibrate(s))
            assert cmd.yaw == 0.0 and cmd.roll == 0.0


class TestNormalize:
    def test_identity(self):
        s = sample(3.0, 4.0, 5.0)
        assert normalize(s, calibrate(s)) == normalize(s, calibrate(s))
        cmd = normalize(s, calibrate(s))
        assert (cmd.yaw, cmd.roll) == (0.0, 0.0)

    def test_clamps_to_90(self):
        # delta of +120 clamps to the +/-90 output range
        cmd = normalize(sample(yaw=130.0), ref(yaw0=10.0))
        assert cmd.yaw == 90.0

    def test_seam_crossing(self):
        # ref 170, sample -170: shortest signed difference is +20 through the seam
        cmd = normalize(sample(yaw=-170.0), ref(yaw0=170.0))
        assert cmd.yaw == pytest.approx(20.0, abs=1e-12)

    def test_outputs_always_in_range(self):
        rng = random.Random(99)
        for _ in range(2000):
            s = sample(
                roll=rng.uniform(-179.99, 180),
                pitch=rng.uniform(-179.99, 180),
                yaw=rng.uniform(-179.99, 180),
            )
            r = ref(
                roll0=rng.uniform(-179.99, 180),
                pitch0=rng.uniform(-179.99, 180),
                yaw0=rng.uniform(-179.99, 180),
            )
            cmd = normalize(s, r)
            assert -90.0 <= cmd.yaw <= 90.0
            assert -90.0 <= cmd.roll <= 90.0

    def test_seam_continuity_sweep(self):
        # sweeping the sample yaw across the representation seam must not jump
        for ref_yaw in (170.0, 179.5, 180.0, -179.5, -170.0):
            r = ref(yaw0=ref_yaw)
            outputs = []
            for k in range(-150, 151):
                s = sample(yaw=wrap180(ref_yaw + k))
                outputs.append(normalize(s, r).yaw)
            steps = [abs(b - a) for a, b in zip(outputs, outputs[1:])]
            assert max(steps) <= 1.5

    def test_monotone_inside_clamp_region(self):
        r = ref(yaw0=170.0)
        prev = None
        for k in range(-89, 90):
            out = normalize(sample(yaw=wrap180(170.0 + k)), r).yaw
            if prev is not None:
                assert out > prev
            prev = out

    def test_invert_flags(self):
        cfg = HeadControlConfig(invert_yaw=True, invert_roll=True)
        cmd = normalize(sample(roll=10.0, yaw=20.0), ref(), cfg)
        assert (cmd.yaw, cmd.roll) == (-20.0, -10.0)

    def test_pitch_as_roll_source(self):
        cfg = HeadControlConfig(roll_source=PHONE_PITCH)
        cmd = normalize(sample(roll=50.0, pitch=-12.0), ref(), cfg)
        assert cmd.roll == -12.0

    def test_config_validation(self):
        with pytest.raises(ValueError):
            HeadControlConfig(roll_source="phone_yaw")
        with pytest.raises(ValueError):
            HeadControlConfig(smoothing=1.0)


class TestHeadTracker:
    def msg(self, yaw, seq, roll=0.0):
        return json.dumps({"roll": roll, "pitch": 0, "yaw": yaw, "seq": seq})

    def test_calibrates_on_first_sample(self):
        tr = HeadTracker()
        cmd = tr.ingest(self.msg(yaw=37.0, seq=1), 0.0)
        assert (cmd.yaw, cmd.roll) == (0.0, 0.0)
        cmd = tr.ingest(self.msg(yaw=42.0, seq=2), 10.0)
        assert cmd.yaw == pytest.approx(5.0)

    def test_drops_out_of_order(self):
        tr = HeadTracker()
        assert tr.ingest(self.msg(0.0, seq=5), 0.0) is not None
        assert tr.ingest(self.msg(10.0, seq=5), 1.0) is None
        assert tr.ingest(self.msg(10.0, seq=4), 2.0) is None
        assert tr.dropped_out_of_order == 2
        # newer seq accepted again
        assert tr.ingest(self.msg(10.0, seq=6), 3.0).yaw == pytest.approx(10.0)

    def test_drops_malformed_but_stays_usable(self):
        tr = HeadTracker()
        assert tr.ingest("garbage", 0.0) is None
        assert tr.dropped_malformed == 1
        assert tr.ingest(self.msg(0.0, seq=1), 1.0) is not None

    def test_recalibration(self):
        tr = HeadTracker()
        tr.ingest(self.msg(0.0, seq=1), 0.0)
        assert tr.ingest(self.msg(30.0, seq=2), 1.0).yaw == pytest.approx(30.0)
        tr.request_recalibration()
        # unchanged phone pose becomes the new zero
        assert tr.ingest(self.msg(30.0, seq=3), 2.0).yaw == 0.0
        assert tr.ingest(self.msg(35.0, seq=4), 3.0).yaw == pytest.approx(5.0)

    def test_smoothing(self):
        tr = HeadTracker(HeadControlConfig(smoothing=0.5))
        tr.ingest(self.msg(0.0, seq=1), 0.0)
        tr.ingest(self.msg(40.0, seq=2), 1.0)
        # EMA: 0.5 * 0 + 0.5 * 40
        assert tr.last_command.yaw == pytest.approx(20.0)
