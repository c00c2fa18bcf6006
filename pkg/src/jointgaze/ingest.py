"""Parsing of per-room recording files and the session manifest.

Recording files are UTF-8 CSV with the exact header
``timestamp_ms,skeleton_id,gaze_x_px,gaze_y_px``. The manifest is a UTF-8
JSON document; in strict mode unknown fields are rejected so typos surface
early instead of silently using defaults.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

from .attention import AttentionConfig
from .errors import DataError, SchemaError
from .preprocess import DISCARD, IdentityRule

RECORDING_HEADER = ("timestamp_ms", "skeleton_id", "gaze_x_px", "gaze_y_px")

ORIGIN_TOP_LEFT = "top-left"
ORIGIN_BOTTOM_LEFT = "bottom-left"
_ORIGINS = (ORIGIN_TOP_LEFT, ORIGIN_BOTTOM_LEFT)


@dataclass(frozen=True)
class RawGazeSample:
    """One body-tracking observation on the recording room's clock."""

    timestamp_ms: int
    skeleton_id: int
    gaze_x_px: float
    gaze_y_px: float


@dataclass(frozen=True)
class DisplayGeometry:
    """Pixel dimensions of a room's display and the origin convention of its raw data."""

    width_px: float
    height_px: float
    origin: str = ORIGIN_BOTTOM_LEFT

    def __post_init__(self) -> None:
        if not (self.width_px > 0 and self.height_px > 0):
            raise SchemaError(
                f"display dimensions must be positive, got {self.width_px}x{self.height_px}"
            )
        if self.origin not in _ORIGINS:
            raise SchemaError(f"unknown display origin {self.origin!r} (expected one of {_ORIGINS})")


@dataclass
class RoomRecording:
    """Time-ordered gaze samples from one room, all on that room's clock."""

    room_id: str
    display: DisplayGeometry
    samples: list[RawGazeSample]
    skipped_rows: int = 0  # rows rejected by the lenient-mode errors policy


@dataclass(frozen=True)
class RoomSpec:
    """Manifest entry for one room.

    ``time_offset_ms`` is added to the room's timestamps to bring them onto
    the session's reference clock; 0 means this room *is* the reference.
    """

    room_id: str
    recording_path: str
    display: DisplayGeometry
    time_offset_ms: int = 0


@dataclass(frozen=True)
class Interval:
    start_ms: int
    end_ms: int


@dataclass(frozen=True)
class SessionManifest:
    session_id: str
    rooms: tuple[RoomSpec, ...]
    mixed_presence: Interval
    identity_map: tuple[IdentityRule, ...]
    analysis: AttentionConfig = field(default_factory=AttentionConfig)

    def rules_for_room(self, room_id: str) -> list[IdentityRule]:
        return [r for r in self.identity_map if r.room_id == room_id]

    def participants(self) -> list[str]:
        """Mapped participant labels, in identity-map order, deduplicated."""
        seen: list[str] = []
        for rule in self.identity_map:
            if rule.participant != DISCARD and rule.participant not in seen:
                seen.append(rule.participant)
        return seen


def _decode(data: bytes | str) -> str:
    if isinstance(data, bytes):
        return data.decode("utf-8-sig")
    return data.lstrip("﻿")


def parse_recording(
    data: bytes | str,
    display: DisplayGeometry,
    room_id: str,
    *,
    strict: bool = True,
) -> RoomRecording:
    """Parse recording CSV content into a time-sorted :class:`RoomRecording`.

    In strict mode (default) any malformed row aborts with a :class:`DataError`
    naming the line; in lenient mode bad rows are skipped and counted in
    ``skipped_rows``. Unsorted input is stably sorted by timestamp.
    """
    text = _decode(data)
    if not text.strip():
        raise SchemaError(f"recording for room {room_id!r} is empty")

    reader = csv.reader(io.StringIO(text))
    header = next(reader, None)
    if header is None:
        raise SchemaError(f"recording for room {room_id!r} is empty")
    header = tuple(h.strip() for h in header)
    if header != RECORDING_HEADER:
        missing = [c for c in RECORDING_HEADER if c not in header]
        unknown = [c for c in header if c not in RECORDING_HEADER]
        if missing:
            raise SchemaError(f"recording header is missing column {missing[0]!r}")
        if unknown:
            raise SchemaError(f"recording header has unknown column {unknown[0]!r}")
        raise SchemaError(f"recording header columns are misordered: {header}")

    samples: list[RawGazeSample] = []
    skipped = 0
    for lineno, row in enumerate(reader, start=2):
        if not row:
            continue  # blank line, not a data row
        problem = None
        if len(row) != 4:
            problem = f"expected 4 columns, got {len(row)}"
        else:
            try:
                t = int(row[0])
                skel = int(row[1])
                gx = float(row[2])
                gy = float(row[3])
            except ValueError:
                problem = "non-numeric cell"
            else:
                if t < 0:
                    problem = f"negative timestamp {t}"
                elif not (math.isfinite(gx) and math.isfinite(gy)):
                    problem = "non-finite gaze coordinate"
        if problem is not None:
            if strict:
                raise DataError(f"recording {room_id!r} line {lineno}: {problem}")
            skipped += 1
            continue
        samples.append(RawGazeSample(t, skel, gx, gy))

    samples.sort(key=lambda s: s.timestamp_ms)  # stable, preserves input order on ties
    return RoomRecording(room_id=room_id, display=display, samples=samples, skipped_rows=skipped)


def read_recording(
    path: str | Path,
    display: DisplayGeometry,
    room_id: str,
    *,
    strict: bool = True,
) -> RoomRecording:
    return parse_recording(Path(path).read_bytes(), display, room_id, strict=strict)


def serialize_recording(recording: RoomRecording) -> str:
    """Render a recording back to CSV; round-trips exactly through :func:`parse_recording`."""
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(RECORDING_HEADER)
    for s in recording.samples:
        writer.writerow([s.timestamp_ms, s.skeleton_id, repr(s.gaze_x_px), repr(s.gaze_y_px)])
    return out.getvalue()


# --- manifest ---------------------------------------------------------------


def _require(obj: dict, key: str, where: str):
    if key not in obj:
        raise SchemaError(f"{where} is missing required field {key!r}")
    return obj[key]


def _check_unknown(obj: dict, allowed: tuple[str, ...], where: str, strict: bool) -> None:
    if not strict:
        return
    for key in obj:
        if key not in allowed:
            raise SchemaError(f"{where} has unknown field {key!r}")


def _as_int(value, where: str) -> int:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise SchemaError(f"{where} must be an integer, got {value!r}")
    if isinstance(value, float):
        if not value.is_integer():
            raise SchemaError(f"{where} must be an integer, got {value!r}")
        value = int(value)
    return value


def _as_number(value, where: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise SchemaError(f"{where} must be a number, got {value!r}")
    value = float(value)
    if not math.isfinite(value):
        raise SchemaError(f"{where} must be finite, got {value!r}")
    return value


def _parse_display(obj, where: str, strict: bool) -> DisplayGeometry:
    if not isinstance(obj, dict):
        raise SchemaError(f"{where} must be an object")
    _check_unknown(obj, ("width_px", "height_px", "origin"), where, strict)
    width = _as_number(_require(obj, "width_px", where), f"{where}.width_px")
    height = _as_number(_require(obj, "height_px", where), f"{where}.height_px")
    origin = obj.get("origin", ORIGIN_BOTTOM_LEFT)
    if not isinstance(origin, str):
        raise SchemaError(f"{where}.origin must be a string")
    return DisplayGeometry(width_px=width, height_px=height, origin=origin)


def load_manifest(data: bytes | str, *, strict: bool = True) -> SessionManifest:
    """Parse and fully validate a session manifest.

    Checks room uniqueness, clock-offset rules, the mixed-presence interval,
    identity-map consistency and that at least two participants are mapped.
    """
    text = _decode(data)
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"manifest is not valid JSON: {exc}") from None
    if not isinstance(doc, dict):
        raise SchemaError("manifest must be a JSON object")
    _check_unknown(
        doc,
        ("session_id", "rooms", "mixed_presence", "identity_map", "analysis"),
        "manifest",
        strict,
    )

    session_id = _require(doc, "session_id", "manifest")
    if not isinstance(session_id, str) or not session_id:
        raise SchemaError("manifest.session_id must be a non-empty string")

    rooms_doc = _require(doc, "rooms", "manifest")
    if not isinstance(rooms_doc, list) or not rooms_doc:
        raise SchemaError("manifest.rooms must be a non-empty list")
    rooms: list[RoomSpec] = []
    omitted_offsets = 0
    for i, room_obj in enumerate(rooms_doc):
        where = f"manifest.rooms[{i}]"
        if not isinstance(room_obj, dict):
            raise SchemaError(f"{where} must be an object")
        _check_unknown(
            room_obj, ("room_id", "recording_path", "display", "time_offset_ms"), where, strict
        )
        room_id = _require(room_obj, "room_id", where)
        if not isinstance(room_id, str) or not room_id:
            raise SchemaError(f"{where}.room_id must be a non-empty string")
        recording_path = _require(room_obj, "recording_path", where)
        if not isinstance(recording_path, str) or not recording_path:
            raise SchemaError(f"{where}.recording_path must be a non-empty string")
        display = _parse_display(_require(room_obj, "display", where), f"{where}.display", strict)
        if "time_offset_ms" in room_obj:
            offset = _as_int(room_obj["time_offset_ms"], f"{where}.time_offset_ms")
        else:
            offset = 0
            omitted_offsets += 1
        rooms.append(RoomSpec(room_id, recording_path, display, offset))
    ids = [r.room_id for r in rooms]
    for rid in ids:
        if ids.count(rid) > 1:
            raise SchemaError(f"duplicate room_id {rid!r} in manifest")
    if omitted_offsets > 1:
        raise SchemaError(
            "at most one room may omit time_offset_ms (the reference-clock room)"
        )

    mp_obj = _require(doc, "mixed_presence", "manifest")
    if not isinstance(mp_obj, dict):
        raise SchemaError("manifest.mixed_presence must be an object")
    _check_unknown(mp_obj, ("start_ms", "end_ms"), "manifest.mixed_presence", strict)
    start = _as_int(_require(mp_obj, "start_ms", "manifest.mixed_presence"), "mixed_presence.start_ms")
    end = _as_int(_require(mp_obj, "end_ms", "manifest.mixed_presence"), "mixed_presence.end_ms")
    if start < 0:
        raise SchemaError(f"mixed_presence.start_ms must be >= 0, got {start}")
    if not start < end:
        raise SchemaError(f"mixed_presence interval is empty: start {start} >= end {end}")
    mixed_presence = Interval(start, end)

    rules_doc = _require(doc, "identity_map", "manifest")
    if not isinstance(rules_doc, list):
        raise SchemaError("manifest.identity_map must be a list")
    room_ids = {r.room_id for r in rooms}
    rules: list[IdentityRule] = []
    by_key: dict[tuple[str, int], str] = {}
    for i, rule_obj in enumerate(rules_doc):
        where = f"manifest.identity_map[{i}]"
        if not isinstance(rule_obj, dict):
            raise SchemaError(f"{where} must be an object")
        _check_unknown(rule_obj, ("room_id", "skeleton_id", "participant"), where, strict)
        room_id = _require(rule_obj, "room_id", where)
        if room_id not in room_ids:
            raise SchemaError(f"{where} references unknown room {room_id!r}")
        skeleton_id = _as_int(_require(rule_obj, "skeleton_id", where), f"{where}.skeleton_id")
        participant = _require(rule_obj, "participant", where)
        if not isinstance(participant, str) or not participant:
            raise SchemaError(f"{where}.participant must be a non-empty string")
        key = (room_id, skeleton_id)
        if key in by_key:
            if by_key[key] != participant:
                raise SchemaError(
                    f"conflicting identity rules: ({room_id!r}, {skeleton_id}) mapped to both "
                    f"{by_key[key]!r} and {participant!r}"
                )
            raise SchemaError(f"duplicate identity rule for ({room_id!r}, {skeleton_id})")
        by_key[key] = participant
        rules.append(IdentityRule(room_id, skeleton_id, participant))

    mapped = {r.participant for r in rules if r.participant != DISCARD}
    if len(mapped) < 2:
        raise SchemaError(
            f"session needs at least 2 mapped participants, identity_map yields {len(mapped)}"
        )

    analysis = AttentionConfig()
    if "analysis" in doc:
        a_obj = doc["analysis"]
        if not isinstance(a_obj, dict):
            raise SchemaError("manifest.analysis must be an object")
        _check_unknown(a_obj, ("threshold", "rate_hz", "window_s"), "manifest.analysis", strict)
        kwargs = {}
        for key in ("threshold", "rate_hz", "window_s"):
            if key in a_obj:
                kwargs[key] = _as_number(a_obj[key], f"manifest.analysis.{key}")
        try:
            analysis = AttentionConfig(**kwargs)
        except ValueError as exc:
            raise SchemaError(f"manifest.analysis: {exc}") from None

    return SessionManifest(
        session_id=session_id,
        rooms=tuple(rooms),
        mixed_presence=mixed_presence,
        identity_map=tuple(rules),
        analysis=analysis,
    )


def read_manifest(path: str | Path, *, strict: bool = True) -> SessionManifest:
    return load_manifest(Path(path).read_bytes(), strict=strict)
