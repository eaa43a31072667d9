"""Session file format, dataset manifests, and ground-truth label derivation.

A session file is line-delimited JSON: one header line followed by one record
per line. The header is ``{"schema": "waffle/1", "participant": ...,
"scenario": ...}`` and every other line carries a ``track`` field:

    {"track": "imu", "t": .., "ax": .., "ay": .., "az": ..,
     "qw": .., "qx": .., "qy": .., "qz": ..}      # quaternion optional
    {"track": "mic", "t": .., "amp": ..}
    {"track": "bite", "staging_arrival_t": .., "feeding_arrival_t": ..,
     "bite_complete_t": ..}
    {"track": "motion", "t": .., "moving": 0 or 1}

Timestamps are seconds from session start, accelerations m/s^2, microphone
amplitude normalized to [-1, 1]. A dataset manifest is a single JSON document
``{"schema": "waffle-manifest/1", "sessions": [paths...]}`` with paths
relative to the manifest's directory.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ParseError, SchemaVersionError, TrackValidationError

SESSION_SCHEMA = "waffle/1"
MANIFEST_SCHEMA = "waffle-manifest/1"

SCENARIOS = ("individual", "social")

QUAT_NORM_TOL = 1e-3


@dataclass(frozen=True)
class BiteEvent:
    """One completed feeding cycle: staging, then mouth arrival, then done."""

    staging_arrival_t: float
    feeding_arrival_t: float
    bite_complete_t: float

    def __post_init__(self) -> None:
        if not (
            self.staging_arrival_t < self.feeding_arrival_t < self.bite_complete_t
        ):
            raise TrackValidationError(
                f"bite timestamps must be strictly ordered, got "
                f"({self.staging_arrival_t}, {self.feeding_arrival_t}, "
                f"{self.bite_complete_t})"
            )


@dataclass
class SessionRecord:
    """All sensor tracks and ground truth of one recorded session.

    Tracks are stored as column arrays: ``imu_t`` (n,), ``imu_accel`` (n, 3),
    ``imu_quat`` (n, 4) in w, x, y, z order or None, ``mic_t`` (m,),
    ``mic_amp`` (m,), ``motion_t`` (k,) with ``motion_moving`` (k,) in {0, 1}.
    """

    participant_id: str
    scenario: str
    imu_t: np.ndarray
    imu_accel: np.ndarray
    mic_t: np.ndarray
    mic_amp: np.ndarray
    imu_quat: np.ndarray | None = None
    bites: list[BiteEvent] = field(default_factory=list)
    motion_t: np.ndarray = field(default_factory=lambda: np.empty(0))
    motion_moving: np.ndarray = field(default_factory=lambda: np.empty(0, dtype=np.int64))


@dataclass(frozen=True)
class LabeledWindow:
    """One feature row: an extracted window plus its ground-truth labels.

    ``time_to_bite`` is the uncapped time in seconds from the window end to
    the next mouth arrival. ``motion_label`` is the robot proceed/stop state
    at the window end (1 = proceeding), or None when no motion ground truth
    covers that instant.
    """

    participant_id: str
    window_end_t: float
    features: np.ndarray
    time_to_bite: float
    motion_label: int | None


def _require_increasing(t: np.ndarray, track: str) -> None:
    bad = np.nonzero(np.diff(t) <= 0)[0]
    if bad.size:
        i = int(bad[0]) + 1
        raise TrackValidationError(
            f"{track} timestamps must be strictly increasing, "
            f"violated at sample {i} (t={t[i]!r} after t={t[i - 1]!r})"
        )


def validate_session(session: SessionRecord) -> None:
    """Check ordering, range, and norm constraints on every track.

    Raises TrackValidationError naming the offending track and sample index.
    """
    if session.scenario not in SCENARIOS:
        raise TrackValidationError(
            f"scenario must be one of {SCENARIOS}, got {session.scenario!r}"
        )
    if session.imu_t.size:
        _require_increasing(session.imu_t, "imu")
    if session.imu_accel.shape != (session.imu_t.size, 3):
        raise TrackValidationError(
            f"imu accel shape {session.imu_accel.shape} does not match "
            f"{session.imu_t.size} timestamps"
        )
    if session.imu_quat is not None:
        if session.imu_quat.shape != (session.imu_t.size, 4):
            raise TrackValidationError(
                f"imu quat shape {session.imu_quat.shape} does not match "
                f"{session.imu_t.size} timestamps"
            )
        norms = np.linalg.norm(session.imu_quat, axis=1)
        bad = np.nonzero(np.abs(norms - 1.0) > QUAT_NORM_TOL)[0]
        if bad.size:
            i = int(bad[0])
            raise TrackValidationError(
                f"imu quaternion at sample {i} has norm {norms[i]:.6f}, "
                f"expected 1 within {QUAT_NORM_TOL}"
            )
    if session.mic_t.size:
        _require_increasing(session.mic_t, "mic")
    if session.mic_amp.shape != session.mic_t.shape:
        raise TrackValidationError(
            f"mic amp shape {session.mic_amp.shape} does not match "
            f"{session.mic_t.size} timestamps"
        )
    bad = np.nonzero(np.abs(session.mic_amp) > 1.0)[0]
    if bad.size:
        i = int(bad[0])
        raise TrackValidationError(
            f"mic amplitude at sample {i} is {session.mic_amp[i]!r}, "
            f"outside [-1, 1]"
        )
    for i in range(1, len(session.bites)):
        prev, cur = session.bites[i - 1], session.bites[i]
        if cur.staging_arrival_t < prev.bite_complete_t:
            raise TrackValidationError(
                f"bite {i} starts staging at {cur.staging_arrival_t} before "
                f"bite {i - 1} completes at {prev.bite_complete_t}"
            )
    if session.motion_t.size:
        _require_increasing(session.motion_t, "motion")
    if session.motion_moving.shape != session.motion_t.shape:
        raise TrackValidationError(
            f"motion moving shape {session.motion_moving.shape} does not "
            f"match {session.motion_t.size} timestamps"
        )
    bad = np.nonzero(~np.isin(session.motion_moving, (0, 1)))[0]
    if bad.size:
        i = int(bad[0])
        raise TrackValidationError(
            f"motion label at sample {i} is {session.motion_moving[i]!r}, "
            f"expected 0 or 1"
        )


def write_session(session: SessionRecord, path: str | Path) -> None:
    """Write one session to ``path`` in the line-delimited format."""
    validate_session(session)
    path = Path(path)
    dump = json.dumps
    with path.open("w", encoding="utf-8") as f:
        f.write(
            dump(
                {
                    "schema": SESSION_SCHEMA,
                    "participant": session.participant_id,
                    "scenario": session.scenario,
                },
                separators=(",", ":"),
            )
            + "\n"
        )
        for i in range(session.imu_t.size):
            rec = {
                "track": "imu",
                "t": float(session.imu_t[i]),
                "ax": float(session.imu_accel[i, 0]),
                "ay": float(session.imu_accel[i, 1]),
                "az": float(session.imu_accel[i, 2]),
            }
            if session.imu_quat is not None:
                rec["qw"] = float(session.imu_quat[i, 0])
                rec["qx"] = float(session.imu_quat[i, 1])
                rec["qy"] = float(session.imu_quat[i, 2])
                rec["qz"] = float(session.imu_quat[i, 3])
            f.write(dump(rec, separators=(",", ":")) + "\n")
        for i in range(session.mic_t.size):
            f.write(
                dump(
                    {
                        "track": "mic",
                        "t": float(session.mic_t[i]),
                        "amp": float(session.mic_amp[i]),
                    },
                    separators=(",", ":"),
                )
                + "\n"
            )
        for b in session.bites:
            f.write(
                dump(
                    {
                        "track": "bite",
                        "staging_arrival_t": b.staging_arrival_t,
                        "feeding_arrival_t": b.feeding_arrival_t,
                        "bite_complete_t": b.bite_complete_t,
                    },
                    separators=(",", ":"),
                )
                + "\n"
            )
        for i in range(session.motion_t.size):
            f.write(
                dump(
                    {
                        "track": "motion",
                        "t": float(session.motion_t[i]),
                        "moving": int(session.motion_moving[i]),
                    },
                    separators=(",", ":"),
                )
                + "\n"
            )


def _parse_line(path: Path, lineno: int, line: str) -> dict:
    try:
        rec = json.loads(line)
    except json.JSONDecodeError as e:
        raise ParseError(f"{path}:{lineno}: invalid JSON: {e.msg}") from e
    if not isinstance(rec, dict):
        raise ParseError(f"{path}:{lineno}: expected a JSON object")
    return rec


def _field(path: Path, lineno: int, rec: dict, key: str) -> float:
    try:
        return rec[key]
    except KeyError:
        raise ParseError(
            f"{path}:{lineno}: {rec.get('track', 'record')!r} line is "
            f"missing field {key!r}"
        ) from None


def read_session(path: str | Path) -> SessionRecord:
    """Read and validate one session file.

    Raises:
        ParseError: malformed JSON or missing fields, with the line number.
        SchemaVersionError: the header declares an unknown schema.
        TrackValidationError: parsed tracks violate format invariants.
    """
    path = Path(path)
    with path.open("r", encoding="utf-8") as f:
        lines = f.read().splitlines()
    if not lines:
        raise ParseError(f"{path}: empty file, expected a header line")

    header = _parse_line(path, 1, lines[0])
    schema = header.get("schema")
    if schema is None:
        raise ParseError(f"{path}:1: header is missing the 'schema' field")
    if schema != SESSION_SCHEMA:
        raise SchemaVersionError(
            f"{path}: schema {schema!r} is not supported, expected {SESSION_SCHEMA!r}"
        )
    if "participant" not in header or "scenario" not in header:
        raise ParseError(f"{path}:1: header needs 'participant' and 'scenario'")

    imu_rows: list[tuple] = []
    quat_rows: list[tuple] = []
    mic_rows: list[tuple] = []
    bites: list[BiteEvent] = []
    motion_rows: list[tuple] = []
    has_quat: bool | None = None

    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        rec = _parse_line(path, lineno, line)
        track = rec.get("track")
        if track == "imu":
            imu_rows.append(
                (
                    _field(path, lineno, rec, "t"),
                    _field(path, lineno, rec, "ax"),
                    _field(path, lineno, rec, "ay"),
                    _field(path, lineno, rec, "az"),
                )
            )
            quat_present = "qw" in rec
            if has_quat is None:
                has_quat = quat_present
            elif has_quat != quat_present:
                raise ParseError(
                    f"{path}:{lineno}: quaternion fields must be present on "
                    f"all imu lines or none"
                )
            if quat_present:
                quat_rows.append(
                    (
                        _field(path, lineno, rec, "qw"),
                        _field(path, lineno, rec, "qx"),
                        _field(path, lineno, rec, "qy"),
                        _field(path, lineno, rec, "qz"),
                    )
                )
        elif track == "mic":
            mic_rows.append(
                (_field(path, lineno, rec, "t"), _field(path, lineno, rec, "amp"))
            )
        elif track == "bite":
            try:
                bites.append(
                    BiteEvent(
                        staging_arrival_t=_field(path, lineno, rec, "staging_arrival_t"),
                        feeding_arrival_t=_field(path, lineno, rec, "feeding_arrival_t"),
                        bite_complete_t=_field(path, lineno, rec, "bite_complete_t"),
                    )
                )
            except TrackValidationError as e:
                raise TrackValidationError(f"{path}:{lineno}: {e}") from None
        elif track == "motion":
            motion_rows.append(
                (_field(path, lineno, rec, "t"), _field(path, lineno, rec, "moving"))
            )
        else:
            raise ParseError(f"{path}:{lineno}: unknown track {track!r}")

    imu = np.array(imu_rows, dtype=np.float64).reshape(-1, 4)
    mic = np.array(mic_rows, dtype=np.float64).reshape(-1, 2)
    motion = np.array(motion_rows, dtype=np.float64).reshape(-1, 2)
    session = SessionRecord(
        participant_id=str(header["participant"]),
        scenario=str(header["scenario"]),
        imu_t=imu[:, 0],
        imu_accel=imu[:, 1:4],
        imu_quat=np.array(quat_rows, dtype=np.float64) if quat_rows else None,
        mic_t=mic[:, 0],
        mic_amp=mic[:, 1],
        bites=bites,
        motion_t=motion[:, 0],
        motion_moving=motion[:, 1].astype(np.int64),
    )
    validate_session(session)
    return session


def write_manifest(session_paths: list[str | Path], path: str | Path) -> None:
    """Write a dataset manifest listing session files relative to it."""
    path = Path(path)
    rel = [str(Path(p).resolve().relative_to(path.resolve().parent)) for p in session_paths]
    doc = {"schema": MANIFEST_SCHEMA, "sessions": rel}
    path.write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")


def load_dataset(manifest_path: str | Path) -> list[SessionRecord]:
    """Load every session listed in a manifest.

    Sessions are returned sorted by (participant, scenario, path) so dataset
    order never depends on manifest order.
    """
    manifest_path = Path(manifest_path)
    try:
        doc = json.loads(manifest_path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise ParseError(f"{manifest_path}: invalid JSON: {e.msg}") from e
    if not isinstance(doc, dict) or "schema" not in doc:
        raise ParseError(f"{manifest_path}: expected an object with a 'schema' field")
    if doc["schema"] != MANIFEST_SCHEMA:
        raise SchemaVersionError(
            f"{manifest_path}: schema {doc['schema']!r} is not supported, "
            f"expected {MANIFEST_SCHEMA!r}"
        )
    sessions = []
    for rel in doc.get("sessions", []):
        sessions.append(read_session(manifest_path.parent / rel))
    sessions.sort(key=lambda s: (s.participant_id, s.scenario))
    return sessions


def derive_time_to_bite(session: SessionRecord, window_end_t: float) -> float | None:
    """Seconds from ``window_end_t`` to the next mouth arrival.

    Returns None when no bite arrives at or after the window end; windows
    after the final bite carry no regression label.
    """
    upcoming = [
        b.feeding_arrival_t
        for b in session.bites
        if b.feeding_arrival_t >= window_end_t
    ]
    if not upcoming:
        return None
    return min(upcoming) - window_end_t


def motion_label_at(session: SessionRecord, t: float) -> int | None:
    """Zero-order-hold motion label at time ``t``.

    The label of the most recent motion sample with sample time <= t applies;
    before the first sample there is no label.
    """
    if session.motion_t.size == 0:
        return None
    idx = int(np.searchsorted(session.motion_t, t, side="right")) - 1
    if idx < 0:
        return None
    return int(session.motion_moving[idx])
