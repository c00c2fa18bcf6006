"""Synthetic two-room sessions with scripted joint-attention ground truth.

The generator is the end-to-end oracle for the pipeline: it writes recording
files and a manifest in the exact ingest formats, injecting known clock
offsets, identity switches and dropouts, and records what an ideal analysis
should recover. Everything is driven by a seeded RNG so a fixed spec yields
byte-identical files.

Participants follow mean-reverting random walks around per-participant anchor
points spread over the display; during a scripted episode its members' gaze
snaps to the episode target plus isotropic Gaussian jitter.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .attention import AttentionConfig, windowed_share
from .errors import SchemaError, SessionError
from .ingest import (
    RECORDING_HEADER,
    DisplayGeometry,
    ORIGIN_TOP_LEFT,
)
from .preprocess import DISCARD, IdentityRule
from .timeline import UniformGrid, build_grid
from .util import fmt_num, write_atomic

# Reference-clock start of the mixed-presence interval. Non-zero so that
# negative injected clock offsets cannot push room timestamps below zero.
EPOCH_MS = 10_000
CADENCE_HZ = 30.0
JITTER_MS = 5.0
LEAD_MS = 3_000  # samples emitted before/after the interval; exercises trimming

_WALK_REVERSION = 0.15
_WALK_STEP_SIGMA = 0.02
_DEFAULT_ANCHORS = (
    (0.15, 0.25),
    (0.85, 0.75),
    (0.2, 0.8),
    (0.8, 0.2),
    (0.5, 0.05),
    (0.5, 0.95),
    (0.05, 0.5),
    (0.95, 0.5),
)


@dataclass(frozen=True)
class Episode:
    start_s: float
    end_s: float
    target: tuple[float, float]
    members: tuple[str, ...]


@dataclass(frozen=True)
class DropoutWindow:
    participant: str
    start_s: float
    end_s: float


@dataclass(frozen=True)
class IdSwitch:
    participant: str
    at_s: float
    new_skeleton_id: int


@dataclass(frozen=True)
class SynthRoom:
    room_id: str
    display: DisplayGeometry
    clock_offset_ms: int
    participants: tuple[str, ...]


@dataclass(frozen=True)
class SynthSpec:
    session_id: str
    duration_s: float
    rooms: tuple[SynthRoom, ...]
    episodes: tuple[Episode, ...]
    noise_sigma: float
    dropout: tuple[DropoutWindow, ...]
    id_switches: tuple[IdSwitch, ...]
    seed: int
    analysis: AttentionConfig
    anchors: dict[str, tuple[float, float]]

    @property
    def roster(self) -> tuple[str, ...]:
        return tuple(p for room in self.rooms for p in room.participants)


@dataclass(eq=False)
class GroundTruth:
    """What an ideal pipeline should recover from the generated session."""

    session_id: str
    grid: UniformGrid
    threshold: float
    window_s: float
    flag_all: np.ndarray  # all-members-convergent per grid timestamp
    window_start_ms: np.ndarray
    window_end_ms: np.ndarray
    expected_share_all: np.ndarray  # schedule-based share per window
    offsets_ms: dict[str, int]  # injected per-room clock offsets
    identity_map: tuple[IdentityRule, ...]


@dataclass(eq=False)
class SynthResult:
    spec: SynthSpec
    recordings: dict[str, str]  # room_id -> recording CSV text
    manifest: dict
    truth: GroundTruth


@dataclass(eq=False)
class DetectionScore:
    agreement: float
    share_errors: np.ndarray

    @property
    def max_share_error(self) -> float:
        return float(self.share_errors.max()) if self.share_errors.size else 0.0

    @property
    def mean_share_error(self) -> float:
        return float(self.share_errors.mean()) if self.share_errors.size else 0.0


# --- spec loading -----------------------------------------------------------


def _num(obj, key, where, default=None, required=False):
    if key not in obj:
        if required:
            raise SchemaError(f"{where} is missing required field {key!r}")
        return default
    value = obj[key]
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise SchemaError(f"{where}.{key} must be a number, got {value!r}")
    if not math.isfinite(float(value)):
        raise SchemaError(f"{where}.{key} must be finite")
    return float(value)


def _point(value, where) -> tuple[float, float]:
    if (
        not isinstance(value, (list, tuple))
        or len(value) != 2
        or any(isinstance(c, bool) or not isinstance(c, (int, float)) for c in value)
    ):
        raise SchemaError(f"{where} must be a [x, y] pair of numbers")
    x, y = float(value[0]), float(value[1])
    if not (0.0 <= x <= 1.0 and 0.0 <= y <= 1.0):
        raise SchemaError(f"{where} must lie in [0,1]^2, got ({x}, {y})")
    return (x, y)


def load_synth_spec(data: bytes | str, *, seed: int | None = None) -> SynthSpec:
    """Parse and validate a generator spec; ``seed`` overrides the document's."""
    if isinstance(data, bytes):
        data = data.decode("utf-8-sig")
    try:
        doc = json.loads(data)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"synth spec is not valid JSON: {exc}") from None
    if not isinstance(doc, dict):
        raise SchemaError("synth spec must be a JSON object")
    allowed = (
        "session_id",
        "duration_s",
        "seed",
        "noise_sigma",
        "rooms",
        "episodes",
        "dropout",
        "id_switches",
        "anchors",
        "analysis",
    )
    for key in doc:
        if key not in allowed:
            raise SchemaError(f"synth spec has unknown field {key!r}")

    session_id = doc.get("session_id", "synth")
    if not isinstance(session_id, str) or not session_id:
        raise SchemaError("synth spec session_id must be a non-empty string")
    duration_s = _num(doc, "duration_s", "synth spec", required=True)
    if not duration_s > 0:
        raise SchemaError(f"duration_s must be positive, got {duration_s}")
    noise_sigma = _num(doc, "noise_sigma", "synth spec", default=0.0)
    if noise_sigma < 0:
        raise SchemaError(f"noise_sigma must be >= 0, got {noise_sigma}")
    if seed is None:
        seed_val = doc.get("seed")
        if seed_val is None:
            raise SchemaError("synth spec has no seed and none was supplied")
        if isinstance(seed_val, bool) or not isinstance(seed_val, int) or seed_val < 0:
            raise SchemaError(f"seed must be a non-negative integer, got {seed_val!r}")
        seed = seed_val

    rooms_doc = doc.get("rooms")
    if not isinstance(rooms_doc, list) or not rooms_doc:
        raise SchemaError("synth spec needs a non-empty rooms list")
    rooms: list[SynthRoom] = []
    roster: list[str] = []
    for i, room_obj in enumerate(rooms_doc):
        where = f"rooms[{i}]"
        if not isinstance(room_obj, dict):
            raise SchemaError(f"{where} must be an object")
        for key in room_obj:
            if key not in ("room_id", "display", "clock_offset_ms", "participants"):
                raise SchemaError(f"{where} has unknown field {key!r}")
        room_id = room_obj.get("room_id")
        if not isinstance(room_id, str) or not room_id:
            raise SchemaError(f"{where}.room_id must be a non-empty string")
        if any(r.room_id == room_id for r in rooms):
            raise SchemaError(f"duplicate room_id {room_id!r}")
        disp_obj = room_obj.get("display")
        if not isinstance(disp_obj, dict):
            raise SchemaError(f"{where}.display must be an object")
        display = DisplayGeometry(
            width_px=_num(disp_obj, "width_px", f"{where}.display", required=True),
            height_px=_num(disp_obj, "height_px", f"{where}.display", required=True),
            origin=disp_obj.get("origin", "bottom-left"),
        )
        offset = _num(room_obj, "clock_offset_ms", where, default=0.0)
        if offset != int(offset):
            raise SchemaError(f"{where}.clock_offset_ms must be an integer")
        offset = int(offset)
        if EPOCH_MS - LEAD_MS - JITTER_MS + offset < 0:
            raise SchemaError(
                f"{where}.clock_offset_ms {offset} would produce negative room timestamps"
            )
        participants = room_obj.get("participants")
        if not isinstance(participants, list) or not participants:
            raise SchemaError(f"{where}.participants must be a non-empty list")
        for p in participants:
            if not isinstance(p, str) or not p or p == DISCARD:
                raise SchemaError(f"{where}: invalid participant label {p!r}")
            if p in roster:
                raise SchemaError(f"participant {p!r} listed twice")
            roster.append(p)
        rooms.append(SynthRoom(room_id, display, offset, tuple(participants)))
    if len(roster) < 2:
        raise SchemaError("synth spec needs at least 2 participants overall")

    episodes: list[Episode] = []
    for i, ep_obj in enumerate(doc.get("episodes", [])):
        where = f"episodes[{i}]"
        if not isinstance(ep_obj, dict):
            raise SchemaError(f"{where} must be an object")
        for key in ep_obj:
            if key not in ("start_s", "end_s", "target", "members"):
                raise SchemaError(f"{where} has unknown field {key!r}")
        start = _num(ep_obj, "start_s", where, required=True)
        end = _num(ep_obj, "end_s", where, required=True)
        if not (0.0 <= start < end <= duration_s):
            raise SchemaError(f"{where} lies outside the session duration [0, {duration_s}] s")
        target = _point(ep_obj.get("target"), f"{where}.target")
        members = ep_obj.get("members", list(roster))
        if not isinstance(members, list) or not members:
            raise SchemaError(f"{where}.members must be a non-empty list")
        for m in members:
            if m not in roster:
                raise SchemaError(f"{where}.members references unknown participant {m!r}")
        episodes.append(Episode(start, end, target, tuple(members)))

    dropout: list[DropoutWindow] = []
    for i, d_obj in enumerate(doc.get("dropout", [])):
        where = f"dropout[{i}]"
        if not isinstance(d_obj, dict):
            raise SchemaError(f"{where} must be an object")
        participant = d_obj.get("participant")
        if participant not in roster:
            raise SchemaError(f"{where} references unknown participant {participant!r}")
        start = _num(d_obj, "start_s", where, required=True)
        end = _num(d_obj, "end_s", where, required=True)
        if not (0.0 <= start < end <= duration_s):
            raise SchemaError(f"{where} lies outside the session duration")
        for other in dropout:
            if other.participant == participant and start < other.end_s and other.start_s < end:
                raise SchemaError(f"overlapping dropout windows for {participant!r}")
        dropout.append(DropoutWindow(participant, start, end))

    switches: list[IdSwitch] = []
    for i, s_obj in enumerate(doc.get("id_switches", [])):
        where = f"id_switches[{i}]"
        if not isinstance(s_obj, dict):
            raise SchemaError(f"{where} must be an object")
        participant = s_obj.get("participant")
        if participant not in roster:
            raise SchemaError(f"{where} references unknown participant {participant!r}")
        at = _num(s_obj, "at_s", where, required=True)
        if not (0.0 <= at <= duration_s):
            raise SchemaError(f"{where}.at_s lies outside the session duration")
        new_id = s_obj.get("new_skeleton_id")
        if isinstance(new_id, bool) or not isinstance(new_id, int) or new_id < 1:
            raise SchemaError(f"{where}.new_skeleton_id must be a positive integer")
        switches.append(IdSwitch(participant, at, new_id))

    anchors: dict[str, tuple[float, float]] = {}
    anchors_obj = doc.get("anchors", {})
    if not isinstance(anchors_obj, dict):
        raise SchemaError("synth spec anchors must be an object")
    for p, point in anchors_obj.items():
        if p not in roster:
            raise SchemaError(f"anchors references unknown participant {p!r}")
        anchors[p] = _point(point, f"anchors[{p!r}]")

    analysis = AttentionConfig()
    a_obj = doc.get("analysis")
    if a_obj is not None:
        if not isinstance(a_obj, dict):
            raise SchemaError("synth spec analysis must be an object")
        for key in a_obj:
            if key not in ("threshold", "rate_hz", "window_s"):
                raise SchemaError(f"synth spec analysis has unknown field {key!r}")
        try:
            analysis = AttentionConfig(
                **{k: _num(a_obj, k, "analysis", required=True) for k in a_obj}
            )
        except ValueError as exc:
            raise SchemaError(f"synth spec analysis: {exc}") from None

    spec = SynthSpec(
        session_id=session_id,
        duration_s=duration_s,
        rooms=tuple(rooms),
        episodes=tuple(episodes),
        noise_sigma=noise_sigma,
        dropout=tuple(dropout),
        id_switches=tuple(switches),
        seed=seed,
        analysis=analysis,
        anchors=anchors,
    )
    _validate_skeleton_ids(spec)
    return spec


def _base_skeleton_ids(spec: SynthSpec) -> dict[str, int]:
    ids: dict[str, int] = {}
    for room in spec.rooms:
        for k, p in enumerate(room.participants):
            ids[p] = k + 1
    return ids


def _room_of(spec: SynthSpec) -> dict[str, str]:
    return {p: room.room_id for room in spec.rooms for p in room.participants}


def _validate_skeleton_ids(spec: SynthSpec) -> None:
    """Switched ids must stay unambiguous within their room's identity map."""
    base = _base_skeleton_ids(spec)
    room_of = _room_of(spec)
    owner: dict[tuple[str, int], str] = {(room_of[p], i): p for p, i in base.items()}
    for sw in spec.id_switches:
        key = (room_of[sw.participant], sw.new_skeleton_id)
        if owner.setdefault(key, sw.participant) != sw.participant:
            raise SchemaError(
                f"id switch for {sw.participant!r} reuses skeleton id {sw.new_skeleton_id} "
                f"already owned by {owner[key]!r} in room {key[0]!r}"
            )


# --- generation -------------------------------------------------------------


def _participant_track(
    spec: SynthSpec, participant: str, rng: np.random.Generator
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Reference-clock sample times (int ms) and normalised gaze positions."""
    start = EPOCH_MS - LEAD_MS
    end = EPOCH_MS + round(spec.duration_s * 1000) + LEAD_MS
    period = 1000.0 / CADENCE_HZ
    n = int((end - start) / period) + 1
    base_t = start + np.arange(n) * period
    t = np.rint(base_t + rng.uniform(-JITTER_MS, JITTER_MS, n)).astype(np.int64)

    roster = spec.roster
    anchor = spec.anchors.get(
        participant, _DEFAULT_ANCHORS[roster.index(participant) % len(_DEFAULT_ANCHORS)]
    )
    steps = rng.normal(0.0, _WALK_STEP_SIGMA, (n, 2))
    pos = np.empty((n, 2))
    cur = [anchor[0], anchor[1]]
    for i in range(n):
        for a in (0, 1):
            cur[a] += _WALK_REVERSION * (anchor[a] - cur[a]) + steps[i, a]
            cur[a] = min(max(cur[a], 0.0), 1.0)
        pos[i, 0] = cur[0]
        pos[i, 1] = cur[1]

    # episode override: first matching episode wins; jitter drawn for every
    # sample to keep the RNG stream layout independent of the schedule
    ep_noise = rng.normal(0.0, spec.noise_sigma, (n, 2)) if spec.noise_sigma > 0 else np.zeros((n, 2))
    t_rel = t - EPOCH_MS
    for ep in spec.episodes:
        if participant not in ep.members:
            continue
        mask = (t_rel >= round(ep.start_s * 1000)) & (t_rel < round(ep.end_s * 1000))
        pos[mask, 0] = ep.target[0] + ep_noise[mask, 0]
        pos[mask, 1] = ep.target[1] + ep_noise[mask, 1]
    np.clip(pos, 0.0, 1.0, out=pos)
    return t, pos[:, 0], pos[:, 1]


def _to_pixels(x: np.ndarray, y: np.ndarray, display: DisplayGeometry) -> tuple[np.ndarray, np.ndarray]:
    px = x * display.width_px
    py = (1.0 - y) * display.height_px if display.origin == ORIGIN_TOP_LEFT else y * display.height_px
    return px, py


def generate_session(spec: SynthSpec) -> SynthResult:
    """Generate recordings, manifest and ground truth for one spec.

    Deterministic: a fixed spec (seed included) produces byte-identical
    recording text and truth values.
    """
    duration_ms = round(spec.duration_s * 1000)
    start, end = EPOCH_MS, EPOCH_MS + duration_ms
    roster = spec.roster
    base_ids = _base_skeleton_ids(spec)
    room_of = _room_of(spec)

    seeds = np.random.SeedSequence(spec.seed).spawn(len(roster))
    tracks: dict[str, tuple[np.ndarray, np.ndarray, np.ndarray]] = {}
    for participant, child in zip(roster, seeds):
        tracks[participant] = _participant_track(spec, participant, np.random.default_rng(child))

    recordings: dict[str, str] = {}
    for room in spec.rooms:
        cols_t: list[np.ndarray] = []
        cols_id: list[np.ndarray] = []
        cols_px: list[np.ndarray] = []
        cols_py: list[np.ndarray] = []
        for participant in room.participants:
            t, x, y = tracks[participant]
            t_rel = t - EPOCH_MS

            keep = np.ones(t.size, dtype=bool)
            for d in spec.dropout:
                if d.participant == participant:
                    keep &= ~(
                        (t_rel >= round(d.start_s * 1000)) & (t_rel < round(d.end_s * 1000))
                    )

            skel = np.full(t.size, base_ids[participant], dtype=np.int64)
            for sw in sorted(
                (s for s in spec.id_switches if s.participant == participant),
                key=lambda s: s.at_s,
            ):
                skel[t_rel >= round(sw.at_s * 1000)] = sw.new_skeleton_id

            px, py = _to_pixels(x, y, room.display)
            cols_t.append(t[keep] + room.clock_offset_ms)
            cols_id.append(skel[keep])
            cols_px.append(px[keep])
            cols_py.append(py[keep])

        t_all = np.concatenate(cols_t)
        order = np.argsort(t_all, kind="stable")
        id_all = np.concatenate(cols_id)[order]
        px_all = np.concatenate(cols_px)[order]
        py_all = np.concatenate(cols_py)[order]
        t_all = t_all[order]

        lines = [",".join(RECORDING_HEADER)]
        for i in range(t_all.size):
            lines.append(f"{t_all[i]},{id_all[i]},{fmt_num(px_all[i])},{fmt_num(py_all[i])}")
        lines.append("")
        recordings[room.room_id] = "\n".join(lines)

    identity_rules: list[IdentityRule] = []
    seen_keys: set[tuple[str, int]] = set()
    for participant in roster:
        rid = room_of[participant]
        ids = [base_ids[participant]] + [
            sw.new_skeleton_id for sw in spec.id_switches if sw.participant == participant
        ]
        for skel_id in ids:
            if (rid, skel_id) not in seen_keys:
                seen_keys.add((rid, skel_id))
                identity_rules.append(IdentityRule(rid, skel_id, participant))

    manifest = {
        "session_id": spec.session_id,
        "rooms": [
            {
                "room_id": room.room_id,
                "recording_path": f"room_{room.room_id}.csv",
                "display": {
                    "width_px": room.display.width_px,
                    "height_px": room.display.height_px,
                    "origin": room.display.origin,
                },
                "time_offset_ms": -room.clock_offset_ms,
            }
            for room in spec.rooms
        ],
        "mixed_presence": {"start_ms": start, "end_ms": end},
        "identity_map": [
            {"room_id": r.room_id, "skeleton_id": r.skeleton_id, "participant": r.participant}
            for r in identity_rules
        ],
        "analysis": {
            "threshold": spec.analysis.threshold,
            "rate_hz": spec.analysis.rate_hz,
            "window_s": spec.analysis.window_s,
        },
    }

    truth = _ground_truth(spec, tracks, tuple(identity_rules))
    return SynthResult(spec=spec, recordings=recordings, manifest=manifest, truth=truth)


def _ground_truth(
    spec: SynthSpec,
    tracks: dict[str, tuple[np.ndarray, np.ndarray, np.ndarray]],
    identity_rules: tuple[IdentityRule, ...],
) -> GroundTruth:
    duration_ms = round(spec.duration_s * 1000)
    grid = build_grid(EPOCH_MS, EPOCH_MS + duration_ms, spec.analysis.rate_hz)
    roster = spec.roster

    # convergence flags from the true (pre-dropout) positions, interpolated
    # onto the grid exactly as the pipeline interpolates
    gx = np.stack([np.interp(grid.timestamps, tracks[p][0], tracks[p][1]) for p in roster])
    gy = np.stack([np.interp(grid.timestamps, tracks[p][0], tracks[p][2]) for p in roster])
    d_max = np.zeros(len(grid))
    for i in range(len(roster)):
        for j in range(i + 1, len(roster)):
            d = np.sqrt((gx[i] - gx[j]) ** 2 + (gy[i] - gy[j]) ** 2)
            d_max = np.maximum(d_max, d)
    flag_all = d_max < spec.analysis.threshold

    # expected shares from the episode schedule: a timestamp counts when an
    # all-roster episode covers it
    t_rel = grid.timestamps - EPOCH_MS
    schedule = np.zeros(len(grid), dtype=bool)
    for ep in spec.episodes:
        if set(ep.members) == set(roster):
            schedule |= (t_rel >= ep.start_s * 1000 - 1e-9) & (t_rel < ep.end_s * 1000 - 1e-9)
    windows = windowed_share(schedule, grid, spec.analysis.window_s)

    return GroundTruth(
        session_id=spec.session_id,
        grid=grid,
        threshold=spec.analysis.threshold,
        window_s=spec.analysis.window_s,
        flag_all=flag_all,
        window_start_ms=windows.start_ms,
        window_end_ms=windows.end_ms,
        expected_share_all=windows.share_all,
        offsets_ms={room.room_id: room.clock_offset_ms for room in spec.rooms},
        identity_map=identity_rules,
    )


# --- truth serialisation and scoring ----------------------------------------


def truth_to_json(truth: GroundTruth) -> str:
    doc = {
        "session_id": truth.session_id,
        "grid": {
            "start_ms": truth.grid.start_ms,
            "end_ms": truth.grid.end_ms,
            "rate_hz": truth.grid.rate_hz,
        },
        "threshold": truth.threshold,
        "window_s": truth.window_s,
        "flag_all": [bool(v) for v in truth.flag_all],
        "windows": [
            {
                "start_ms": float(truth.window_start_ms[i]),
                "end_ms": float(truth.window_end_ms[i]),
                "expected_share_all": float(truth.expected_share_all[i]),
            }
            for i in range(len(truth.window_start_ms))
        ],
        "offsets_ms": truth.offsets_ms,
        "identity_map": [
            {"room_id": r.room_id, "skeleton_id": r.skeleton_id, "participant": r.participant}
            for r in truth.identity_map
        ],
    }
    return json.dumps(doc, indent=2) + "\n"


def truth_from_json(data: bytes | str) -> GroundTruth:
    if isinstance(data, bytes):
        data = data.decode("utf-8-sig")
    try:
        doc = json.loads(data)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"truth file is not valid JSON: {exc}") from None
    try:
        grid = build_grid(
            int(doc["grid"]["start_ms"]), int(doc["grid"]["end_ms"]), float(doc["grid"]["rate_hz"])
        )
        flag_all = np.asarray(doc["flag_all"], dtype=bool)
        windows = doc["windows"]
        truth = GroundTruth(
            session_id=doc["session_id"],
            grid=grid,
            threshold=float(doc["threshold"]),
            window_s=float(doc["window_s"]),
            flag_all=flag_all,
            window_start_ms=np.asarray([w["start_ms"] for w in windows], dtype=np.float64),
            window_end_ms=np.asarray([w["end_ms"] for w in windows], dtype=np.float64),
            expected_share_all=np.asarray(
                [w["expected_share_all"] for w in windows], dtype=np.float64
            ),
            offsets_ms={k: int(v) for k, v in doc["offsets_ms"].items()},
            identity_map=tuple(
                IdentityRule(r["room_id"], int(r["skeleton_id"]), r["participant"])
                for r in doc["identity_map"]
            ),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise SchemaError(f"truth file is malformed: {exc}") from None
    if flag_all.size != len(grid):
        raise SchemaError(
            f"truth flag series has {flag_all.size} entries, grid has {len(grid)} points"
        )
    return truth


def score_detection(detected, truth: GroundTruth) -> DetectionScore:
    """Compare a detected :class:`~jointgaze.attention.AttentionSeries` to the truth.

    Agreement is the fraction of grid timestamps where the all-participants
    flag matches; share errors compare per-window shares against the
    schedule-based expectation.
    """
    if detected.timestamps.shape != truth.grid.timestamps.shape or not np.allclose(
        detected.timestamps, truth.grid.timestamps, atol=1e-6
    ):
        raise SessionError("detected series and ground truth are on different grids")
    agreement = float(np.mean(detected.flag_all == truth.flag_all))
    if detected.windows is None:
        raise ValueError("detected series has no windowed shares to score")
    if detected.windows.start_ms.shape != truth.window_start_ms.shape or not np.allclose(
        detected.windows.start_ms, truth.window_start_ms, atol=1e-6
    ):
        raise SessionError("detected windows do not align with ground-truth windows")
    share_errors = np.abs(detected.windows.share_all - truth.expected_share_all)
    return DetectionScore(agreement=agreement, share_errors=share_errors)


def write_session(result: SynthResult, out_dir: str | Path) -> list[Path]:
    """Write recordings, manifest and truth into ``out_dir``; returns the paths."""
    out = Path(out_dir)
    written: list[Path] = []
    for room in result.spec.rooms:
        written.append(
            write_atomic(out / f"room_{room.room_id}.csv", result.recordings[room.room_id])
        )
    written.append(
        write_atomic(out / "manifest.json", json.dumps(result.manifest, indent=2) + "\n")
    )
    written.append(write_atomic(out / "truth.json", truth_to_json(result.truth)))
    return written
