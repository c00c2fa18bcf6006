"""Normalisation steps applied to raw recordings.

Order of operations in the pipeline: shift each room onto the reference
clock, trim to the mixed-presence interval, remap skeleton ids to stable
participant labels, then normalise pixel coordinates to [0,1]^2 with a
bottom-left origin.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import TYPE_CHECKING

import numpy as np

from .errors import DataError

if TYPE_CHECKING:
    from .ingest import DisplayGeometry, RawGazeSample, RoomRecording

# Reserved participant label: samples mapped to it are dropped (facilitators,
# passers-by, other non-participants picked up by the tracker).
DISCARD = "DISCARD"


@dataclass(frozen=True)
class IdentityRule:
    """Maps one (room, skeleton id) pair to a participant label or DISCARD."""

    room_id: str
    skeleton_id: int
    participant: str


@dataclass(frozen=True)
class NormalizedSample:
    """Gaze target in display-relative units, (0,0) = lower-left corner."""

    timestamp_ms: int
    participant: str
    x: float
    y: float


@dataclass
class RemapStats:
    """Audit counters from identity remapping."""

    discarded: int = 0
    unmapped: int = 0
    collisions: dict[str, int] = field(default_factory=dict)

    @property
    def total_collisions(self) -> int:
        return sum(self.collisions.values())


def apply_time_offset(recording: RoomRecording, offset_ms: int) -> RoomRecording:
    """Shift every timestamp by ``offset_ms`` (signed); ordering is preserved."""
    if offset_ms == 0:
        return recording
    if recording.samples and recording.samples[0].timestamp_ms + offset_ms < 0:
        raise DataError(
            f"clock underflow: offset {offset_ms} ms drives room {recording.room_id!r} "
            "timestamps below zero"
        )
    shifted = [replace(s, timestamp_ms=s.timestamp_ms + offset_ms) for s in recording.samples]
    return replace(recording, samples=shifted)


def trim_to_interval(recording: RoomRecording, start_ms: int, end_ms: int) -> RoomRecording:
    """Keep samples with start_ms <= t <= end_ms (closed interval)."""
    if not start_ms < end_ms:
        raise ValueError(f"empty trim interval: start {start_ms} >= end {end_ms}")
    kept = [s for s in recording.samples if start_ms <= s.timestamp_ms <= end_ms]
    return replace(recording, samples=kept)


def remap_identities(
    recording: RoomRecording, rules: list[IdentityRule] | tuple[IdentityRule, ...]
) -> tuple[dict[str, list[RawGazeSample]], RemapStats]:
    """Relabel and merge samples by participant.

    Multiple skeleton ids may map to the same participant (trackers reassign
    ids after losses); DISCARD and unmapped ids are dropped. When a merge
    produces two samples for one participant at the identical timestamp the
    first is kept and a collision is counted.
    """
    mapping = {
        r.skeleton_id: r.participant for r in rules if r.room_id == recording.room_id
    }
    traces: dict[str, list[RawGazeSample]] = {}
    stats = RemapStats()
    for sample in recording.samples:
        participant = mapping.get(sample.skeleton_id)
        if participant is None:
            stats.unmapped += 1
            continue
        if participant == DISCARD:
            stats.discarded += 1
            continue
        trace = traces.setdefault(participant, [])
        if trace and trace[-1].timestamp_ms == sample.timestamp_ms:
            stats.collisions[participant] = stats.collisions.get(participant, 0) + 1
            continue
        trace.append(sample)
    return traces, stats


def _normalize_xy(gx: float, gy: float, display: DisplayGeometry) -> tuple[float, float, bool]:
    if not (math.isfinite(gx) and math.isfinite(gy)):
        raise DataError(f"non-finite gaze coordinate ({gx}, {gy})")
    x = gx / display.width_px
    y = gy / display.height_px
    if display.origin == "top-left":
        y = 1.0 - y
    clamped = not (0.0 <= x <= 1.0 and 0.0 <= y <= 1.0)
    return min(max(x, 0.0), 1.0), min(max(y, 0.0), 1.0), clamped


def normalize_coordinates(
    sample: RawGazeSample, display: DisplayGeometry, participant: str
) -> NormalizedSample:
    """Normalise one sample to [0,1]^2 with a bottom-left origin.

    Off-display coordinates are clamped to the unit square rather than
    dropped; head-gaze rays routinely land slightly off-screen.
    """
    x, y, _ = _normalize_xy(sample.gaze_x_px, sample.gaze_y_px, display)
    return NormalizedSample(sample.timestamp_ms, participant, x, y)


def normalize_trace(
    samples: list[RawGazeSample], display: DisplayGeometry
) -> tuple[np.ndarray, np.ndarray, np.ndarray, int]:
    """Vectorised normalisation of a participant's samples.

    Returns (timestamps_ms, x, y, clamp_count); equivalent to mapping
    :func:`normalize_coordinates` over the list.
    """
    t = np.fromiter((s.timestamp_ms for s in samples), dtype=np.float64, count=len(samples))
    gx = np.fromiter((s.gaze_x_px for s in samples), dtype=np.float64, count=len(samples))
    gy = np.fromiter((s.gaze_y_px for s in samples), dtype=np.float64, count=len(samples))
    if not (np.all(np.isfinite(gx)) and np.all(np.isfinite(gy))):
        raise DataError("non-finite gaze coordinate in trace")
    x = gx / display.width_px
    y = gy / display.height_px
    if display.origin == "top-left":
        y = 1.0 - y
    off = (x < 0.0) | (x > 1.0) | (y < 0.0) | (y > 1.0)
    clamp_count = int(np.count_nonzero(off))
    np.clip(x, 0.0, 1.0, out=x)
    np.clip(y, 0.0, 1.0, out=y)
    return t, x, y, clamp_count
