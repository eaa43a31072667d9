"""Session file round trips, validation errors, and label derivation."""

import json

import numpy as np
import pytest

from bitetiming.dataio import (
    BiteEvent,
    SessionRecord,
    derive_time_to_bite,
    load_dataset,
    motion_label_at,
    read_session,
    write_manifest,
    write_session,
)
from bitetiming.errors import ParseError, SchemaVersionError, TrackValidationError


def small_session(participant="p01", scenario="individual", with_quat=True):
    imu_t = np.array([0.0, 0.4, 0.9, 1.5, 2.2])
    rng = np.random.default_rng(1)
    quat = None
    if with_quat:
        theta = rng.uniform(0.0, 0.2, 5)
        quat = np.stack(
            [np.cos(theta / 2), np.sin(theta / 2), np.zeros(5), np.zeros(5)], axis=1
        )
    return SessionRecord(
        participant_id=participant,
        scenario=scenario,
        imu_t=imu_t,
        imu_accel=rng.normal(0.0, 1.0, (5, 3)),
        imu_quat=quat,
        mic_t=np.array([0.0, 0.5, 1.0, 1.8]),
        mic_amp=np.array([0.1, -0.4, 0.9, -1.0]),
        bites=[BiteEvent(0.5, 1.0, 1.5)],
        motion_t=np.array([0.0, 0.5, 1.0]),
        motion_moving=np.array([0, 1, 0]),
    )


def assert_sessions_equal(a, b):
    assert a.participant_id == b.participant_id
    assert a.scenario == b.scenario
    np.testing.assert_array_equal(a.imu_t, b.imu_t)
    np.testing.assert_array_equal(a.imu_accel, b.imu_accel)
    if a.imu_quat is None:
        assert b.imu_quat is None
    else:
        np.testing.assert_array_equal(a.imu_quat, b.imu_quat)
    np.testing.assert_array_equal(a.mic_t, b.mic_t)
    np.testing.assert_array_equal(a.mic_amp, b.mic_amp)
    assert a.bites == b.bites
    np.testing.assert_array_equal(a.motion_t, b.motion_t)
    np.testing.assert_array_equal(a.motion_moving, b.motion_moving)


def test_bite_event_requires_ordered_timestamps():
    with pytest.raises(TrackValidationError):
        BiteEvent(staging_arrival_t=2.0, feeding_arrival_t=1.0, bite_complete_t=3.0)
    with pytest.raises(TrackValidationError):
        BiteEvent(staging_arrival_t=1.0, feeding_arrival_t=2.0, bite_complete_t=2.0)


@pytest.mark.parametrize("with_quat", [True, False])
def test_session_round_trip(tmp_path, with_quat):
    session = small_session(with_quat=with_quat)
    path = tmp_path / "s.jsonl"
    write_session(session, path)
    assert_sessions_equal(read_session(path), session)


def test_read_session_rejects_non_monotone_imu(tmp_path):
    session = small_session(with_quat=False)
    session.imu_t = np.array([0.0, 0.5, 0.4, 1.5, 2.2])
    path = tmp_path / "bad.jsonl"
    with pytest.raises(TrackValidationError, match="sample 2"):
        write_session(session, path)


def test_read_session_schema_guard(tmp_path):
    path = tmp_path / "future.jsonl"
    path.write_text('{"schema":"waffle/9","participant":"p","scenario":"individual"}\n')
    with pytest.raises(SchemaVersionError):
        read_session(path)


def test_read_session_header_errors(tmp_path):
    path = tmp_path / "h.jsonl"
    path.write_text("")
    with pytest.raises(ParseError):
        read_session(path)
    path.write_text('{"schema":"waffle/1","participant":"p"}\n')
    with pytest.raises(ParseError, match="scenario"):
        read_session(path)
    path.write_text('{"participant":"p","scenario":"individual"}\n')
    with pytest.raises(ParseError, match="schema"):
        read_session(path)


def test_read_session_names_bad_line(tmp_path):
    path = tmp_path / "bad.jsonl"
    path.write_text(
        '{"schema":"waffle/1","participant":"p","scenario":"individual"}\n'
        '{"track":"imu","t":0.0,"ax":0.1,"ay":0.2,"az":9.8}\n'
        "{not json}\n"
    )
    with pytest.raises(ParseError, match=":3:"):
        read_session(path)


def test_read_session_unknown_track(tmp_path):
    path = tmp_path / "bad.jsonl"
    path.write_text(
        '{"schema":"waffle/1","participant":"p","scenario":"individual"}\n'
        '{"track":"gaze","t":0.0}\n'
    )
    with pytest.raises(ParseError, match="gaze"):
        read_session(path)


def test_read_session_missing_field_names_line(tmp_path):
    path = tmp_path / "bad.jsonl"
    path.write_text(
        '{"schema":"waffle/1","participant":"p","scenario":"individual"}\n'
        '{"track":"mic","t":0.0}\n'
    )
    with pytest.raises(ParseError, match=":2:.*amp"):
        read_session(path)


def test_read_session_quaternions_all_or_none(tmp_path):
    path = tmp_path / "bad.jsonl"
    path.write_text(
        '{"schema":"waffle/1","participant":"p","scenario":"individual"}\n'
        '{"track":"imu","t":0.0,"ax":0,"ay":0,"az":9.8,"qw":1,"qx":0,"qy":0,"qz":0}\n'
        '{"track":"imu","t":0.5,"ax":0,"ay":0,"az":9.8}\n'
    )
    with pytest.raises(ParseError, match="quaternion"):
        read_session(path)


def test_validation_mic_range_and_motion_values(tmp_path):
    session = small_session(with_quat=False)
    session.mic_amp = np.array([0.1, -0.4, 1.5, -1.0])
    with pytest.raises(TrackValidationError, match="mic amplitude"):
        write_session(session, tmp_path / "a.jsonl")
    session = small_session(with_quat=False)
    session.motion_moving = np.array([0, 2, 0])
    with pytest.raises(TrackValidationError, match="motion label"):
        write_session(session, tmp_path / "b.jsonl")


def test_validation_quat_norm(tmp_path):
    session = small_session(with_quat=True)
    session.imu_quat = session.imu_quat * 1.1
    with pytest.raises(TrackValidationError, match="norm"):
        write_session(session, tmp_path / "q.jsonl")


def test_validation_overlapping_bites():
    session = small_session(with_quat=False)
    session.bites = [BiteEvent(0.5, 1.0, 1.5), BiteEvent(1.2, 1.6, 2.0)]
    with pytest.raises(TrackValidationError, match="bite 1"):
        write_session(session, "/dev/null")


def test_manifest_round_trip_and_sorting(tmp_path):
    s1 = small_session(participant="p02")
    s2 = small_session(participant="p01", scenario="social")
    p1 = tmp_path / "x.jsonl"
    p2 = tmp_path / "sub" / "y.jsonl"
    p2.parent.mkdir()
    write_session(s1, p1)
    write_session(s2, p2)
    manifest = tmp_path / "manifest.json"
    write_manifest([p1, p2], manifest)

    doc = json.loads(manifest.read_text())
    assert doc["schema"] == "waffle-manifest/1"
    assert doc["sessions"] == ["x.jsonl", "sub/y.jsonl"]

    sessions = load_dataset(manifest)
    assert [(s.participant_id, s.scenario) for s in sessions] == [
        ("p01", "social"),
        ("p02", "individual"),
    ]
    assert_sessions_equal(sessions[1], s1)


def test_load_dataset_schema_guard(tmp_path):
    manifest = tmp_path / "manifest.json"
    manifest.write_text('{"schema":"waffle-manifest/2","sessions":[]}')
    with pytest.raises(SchemaVersionError):
        load_dataset(manifest)
    manifest.write_text("[1, 2]")
    with pytest.raises(ParseError):
        load_dataset(manifest)


def session_with_arrivals(arrivals):
    session = small_session(with_quat=False)
    session.bites = [BiteEvent(a - 2.0, a, a + 2.0) for a in arrivals]
    return session


def test_derive_time_to_bite_fixtures():
    session = session_with_arrivals([20.0, 55.0])
    assert derive_time_to_bite(session, 20.0) == 0.0
    assert derive_time_to_bite(session, 12.0) == 8.0
    assert derive_time_to_bite(session, 30.0) == 25.0
    assert derive_time_to_bite(session, 55.5) is None


def test_derive_time_to_bite_shift_property():
    session = session_with_arrivals([20.0, 55.0])
    rng = np.random.default_rng(5)
    for _ in range(100):
        t = float(rng.uniform(0.0, 19.0))
        delta = float(rng.uniform(0.0, 19.0 - t))
        base = derive_time_to_bite(session, t)
        shifted = derive_time_to_bite(session, t + delta)
        assert base - shifted == pytest.approx(delta, abs=1e-9)


def test_motion_label_zero_order_hold():
    session = small_session(with_quat=False)
    session.motion_t = np.array([1.0, 3.0])
    session.motion_moving = np.array([1, 0])
    assert motion_label_at(session, 2.0) == 1
    assert motion_label_at(session, 3.0) == 0
    assert motion_label_at(session, 0.5) is None
    assert motion_label_at(session, 100.0) == 0
    session.motion_t = np.empty(0)
    session.motion_moving = np.empty(0, dtype=np.int64)
    assert motion_label_at(session, 1.0) is None
