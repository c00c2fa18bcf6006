"""Uniform time grid and per-participant resampling.

All analyses compare participants "at the same timestamp", so every trace is
linearly interpolated onto one shared grid spanning the trimmed interval.
Outside a participant's first/last sample the nearest value is held constant,
which keeps all series equal-length; such points are flagged observed=False.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from typing import TYPE_CHECKING, Mapping, Sequence

import numpy as np

from .errors import SessionError
from .util import fmt_bool, fmt_num

if TYPE_CHECKING:
    from .ingest import SessionManifest
    from .preprocess import NormalizedSample

ALIGNED_HEADER = ("timestamp_ms", "participant", "x", "y", "observed")


@dataclass(frozen=True, eq=False)
class UniformGrid:
    start_ms: int
    end_ms: int
    rate_hz: float
    timestamps: np.ndarray  # float64 ms, strictly increasing, first == start_ms

    @property
    def step_ms(self) -> float:
        return 1000.0 / self.rate_hz

    def __len__(self) -> int:
        return len(self.timestamps)

    def matches(self, other: "UniformGrid") -> bool:
        return (
            len(self) == len(other)
            and self.start_ms == other.start_ms
            and math.isclose(self.rate_hz, other.rate_hz, rel_tol=1e-12)
        )


@dataclass(frozen=True, eq=False)
class ParticipantTrace:
    participant: str
    x: np.ndarray  # [0,1], one value per grid timestamp
    y: np.ndarray
    observed: np.ndarray  # True where a raw sample backs the value

    @property
    def interpolated_fraction(self) -> float:
        return 1.0 - float(np.count_nonzero(self.observed)) / len(self.observed)


@dataclass(frozen=True, eq=False)
class AlignedSession:
    session_id: str
    grid: UniformGrid
    traces: tuple[ParticipantTrace, ...]
    room_of: dict[str, str]

    @property
    def participants(self) -> tuple[str, ...]:
        return tuple(tr.participant for tr in self.traces)

    def trace(self, participant: str) -> ParticipantTrace:
        for tr in self.traces:
            if tr.participant == participant:
                return tr
        raise KeyError(participant)


def build_grid(start_ms: int, end_ms: int, rate_hz: float) -> UniformGrid:
    """Grid timestamps start_ms + k*(1000/rate_hz), k = 0..floor((end-start)*rate/1000)."""
    if not start_ms < end_ms:
        raise ValueError(f"grid interval is empty: start {start_ms} >= end {end_ms}")
    if not rate_hz > 0:
        raise ValueError(f"rate_hz must be positive, got {rate_hz}")
    step = 1000.0 / rate_hz
    k = math.floor((end_ms - start_ms) / step + 1e-9)
    while start_ms + k * step > end_ms + 1e-9:
        k -= 1
    if k < 1:
        raise SessionError(
            f"interval [{start_ms}, {end_ms}] ms yields fewer than 2 grid points at {rate_hz} Hz"
        )
    timestamps = start_ms + np.arange(k + 1, dtype=np.float64) * step
    return UniformGrid(start_ms=start_ms, end_ms=end_ms, rate_hz=rate_hz, timestamps=timestamps)


def resample_arrays(
    participant: str,
    timestamps_ms: np.ndarray,
    x: np.ndarray,
    y: np.ndarray,
    grid: UniformGrid,
) -> ParticipantTrace:
    """Interpolate one participant's samples onto the grid.

    x and y are interpolated independently; before the first / after the last
    sample the edge value is held. A grid point counts as observed when a raw
    sample lies within half a grid step of it.
    """
    t = np.asarray(timestamps_ms, dtype=np.float64)
    if t.size == 0:
        raise SessionError(f"participant {participant!r} has no samples in the interval")
    if t.size > 1 and np.any(np.diff(t) < 0):
        raise ValueError(f"samples for {participant!r} are not time-sorted")
    gx = np.interp(grid.timestamps, t, np.asarray(x, dtype=np.float64))
    gy = np.interp(grid.timestamps, t, np.asarray(y, dtype=np.float64))

    idx = np.searchsorted(t, grid.timestamps)
    before = t[np.clip(idx - 1, 0, t.size - 1)]
    after = t[np.clip(idx, 0, t.size - 1)]
    nearest = np.minimum(np.abs(grid.timestamps - before), np.abs(after - grid.timestamps))
    observed = nearest <= grid.step_ms / 2.0
    return ParticipantTrace(participant=participant, x=gx, y=gy, observed=observed)


def resample_trace(samples: Sequence[NormalizedSample], grid: UniformGrid) -> ParticipantTrace:
    """Convenience wrapper over :func:`resample_arrays` for sample objects."""
    if not samples:
        raise SessionError("cannot resample an empty sample list")
    t = np.array([s.timestamp_ms for s in samples], dtype=np.float64)
    x = np.array([s.x for s in samples], dtype=np.float64)
    y = np.array([s.y for s in samples], dtype=np.float64)
    return resample_arrays(samples[0].participant, t, x, y, grid)


def assemble_session(
    manifest: SessionManifest,
    grid: UniformGrid,
    traces_by_room: Mapping[str, Sequence[ParticipantTrace]],
) -> AlignedSession:
    """Combine per-room traces into one session on the shared grid."""
    traces: list[ParticipantTrace] = []
    room_of: dict[str, str] = {}
    for room in manifest.rooms:
        for trace in traces_by_room.get(room.room_id, ()):
            if trace.participant in room_of:
                raise SessionError(
                    f"participant {trace.participant!r} appears in rooms "
                    f"{room_of[trace.participant]!r} and {room.room_id!r}"
                )
            if len(trace.x) != len(grid):
                raise SessionError(
                    f"trace for {trace.participant!r} has {len(trace.x)} points, grid has {len(grid)}"
                )
            room_of[trace.participant] = room.room_id
            traces.append(trace)
    if len(traces) < 2:
        raise SessionError(f"session roster needs >= 2 participants, got {len(traces)}")
    return AlignedSession(
        session_id=manifest.session_id, grid=grid, traces=tuple(traces), room_of=room_of
    )


def session_to_csv(session: AlignedSession) -> str:
    """Long-format export: one row per (timestamp, participant)."""
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(ALIGNED_HEADER)
    for trace in session.traces:
        label = trace.participant
        for i, t in enumerate(session.grid.timestamps):
            writer.writerow(
                [
                    fmt_num(t),
                    label,
                    fmt_num(trace.x[i]),
                    fmt_num(trace.y[i]),
                    fmt_bool(trace.observed[i]),
                ]
            )
    return out.getvalue()
