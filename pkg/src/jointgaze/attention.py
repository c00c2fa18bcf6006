"""Joint-attention metrics over aligned gaze traces.

At each grid timestamp the maximum pairwise Euclidean distance between gaze
targets is compared against a threshold in normalised display units: if every
pair is closer than the threshold the group plausibly looks at the same spot.
A second, more forgiving series does the same after removing the single
participant whose exclusion most improves the subset ("best (n-1)-subset",
the three-out-of-four view for a roster of four). Shares of below-threshold
time are then computed over tumbling windows.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from itertools import combinations
from typing import TYPE_CHECKING, Sequence

import numpy as np

from .util import fmt_bool, fmt_num

if TYPE_CHECKING:
    from .timeline import AlignedSession, UniformGrid

SERIES_HEADER = ("timestamp_ms", "d_all", "d_subset", "excluded", "flag_all", "flag_subset")
WINDOWS_HEADER = ("window_start_ms", "window_end_ms", "share_all", "share_subset")

# Default threshold: 15 % of the display extent per normalised unit. This is a
# configurable placeholder sized to a plausible art-piece footprint, not a
# measured constant; every output echoes the effective value.
DEFAULT_THRESHOLD = 0.15
DEFAULT_WINDOW_S = 5.0
DEFAULT_RATE_HZ = 10.0


@dataclass(frozen=True)
class AttentionConfig:
    """Analysis knobs. The comparison is fixed as ``distance < threshold``."""

    threshold: float = DEFAULT_THRESHOLD
    window_s: float = DEFAULT_WINDOW_S
    rate_hz: float = DEFAULT_RATE_HZ
    stride_s: float | None = None  # None = tumbling windows (stride == window)

    def __post_init__(self) -> None:
        if not self.threshold > 0:
            raise ValueError(f"threshold must be positive, got {self.threshold}")
        if not self.window_s > 0:
            raise ValueError(f"window_s must be positive, got {self.window_s}")
        if not self.rate_hz > 0:
            raise ValueError(f"rate_hz must be positive, got {self.rate_hz}")
        if self.stride_s is not None and not self.stride_s > 0:
            raise ValueError(f"stride_s must be positive, got {self.stride_s}")

    @property
    def effective_stride_s(self) -> float:
        return self.window_s if self.stride_s is None else self.stride_s


@dataclass(frozen=True, eq=False)
class WindowShares:
    start_ms: np.ndarray
    end_ms: np.ndarray
    share_all: np.ndarray
    share_subset: np.ndarray | None
    point_counts: np.ndarray


@dataclass(frozen=True, eq=False)
class AttentionSeries:
    participants: tuple[str, ...]
    timestamps: np.ndarray
    d_all: np.ndarray
    d_subset: np.ndarray | None  # None when the roster is too small (n < 3)
    excluded_index: np.ndarray | None  # per-timestamp roster index left out by the best subset
    flag_all: np.ndarray
    flag_subset: np.ndarray | None
    config: AttentionConfig
    windows: WindowShares | None = None

    def excluded_label(self, i: int) -> str:
        assert self.excluded_index is not None
        return self.participants[int(self.excluded_index[i])]


def euclidean_distance(p: Sequence[float], q: Sequence[float]) -> float:
    # sqrt(dx*dx + dy*dy) rather than math.hypot so the scalar path, the
    # vectorised path and brute-force cross-checks agree bit-for-bit.
    px, py = p
    qx, qy = q
    if not all(map(math.isfinite, (px, py, qx, qy))):
        raise ValueError("euclidean_distance requires finite coordinates")
    dx = px - qx
    dy = py - qy
    return math.sqrt(dx * dx + dy * dy)


def max_pairwise_distance(points: Sequence[Sequence[float]]) -> tuple[float, tuple[int, int]]:
    """Maximum over all pairs, with the witness pair for diagnostics.

    Ties go to the lowest-index pair (lexicographic), which the strict ``>``
    below guarantees because pairs are scanned in lexicographic order.
    """
    n = len(points)
    if n < 2:
        raise ValueError(f"max_pairwise_distance needs >= 2 points, got {n}")
    best = -1.0
    witness = (0, 1)
    for i, j in combinations(range(n), 2):
        d = euclidean_distance(points[i], points[j])
        if d > best:
            best = d
            witness = (i, j)
    return best, witness


def best_subset_distance(points: Sequence[Sequence[float]]) -> tuple[float, int]:
    """Smallest leave-one-out max-pairwise distance and the excluded index.

    Ties on the distance exclude the lowest index (strict ``<`` with ascending
    scan order).
    """
    n = len(points)
    if n < 3:
        raise ValueError(f"best_subset_distance needs >= 3 points, got {n}")
    best = math.inf
    excluded = 0
    for k in range(n):
        subset = [points[i] for i in range(n) if i != k]
        d, _ = max_pairwise_distance(subset)
        if d < best:
            best = d
            excluded = k
    return best, excluded


def attention_flags(session: AlignedSession, config: AttentionConfig) -> AttentionSeries:
    """Per-timestamp distances and below-threshold flags for a whole session.

    Vectorised equivalent of calling :func:`max_pairwise_distance` and
    :func:`best_subset_distance` at every grid timestamp. Subset metrics are
    populated only for rosters of at least 3.
    """
    n = len(session.traces)
    if n < 2:
        raise ValueError(f"attention metrics need >= 2 participants, got {n}")
    x = np.stack([tr.x for tr in session.traces])
    y = np.stack([tr.y for tr in session.traces])
    pairs = list(combinations(range(n), 2))
    dist = np.stack(
        [np.sqrt((x[i] - x[j]) ** 2 + (y[i] - y[j]) ** 2) for i, j in pairs]
    )  # (n_pairs, n_timestamps)
    d_all = dist.max(axis=0)

    d_subset = excluded = flag_subset = None
    if n >= 3:
        per_exclusion = np.stack(
            [dist[[p for p, (i, j) in enumerate(pairs) if k not in (i, j)]].max(axis=0) for k in range(n)]
        )  # (n, n_timestamps)
        excluded = per_exclusion.argmin(axis=0)  # argmin takes the lowest index on ties
        d_subset = per_exclusion.min(axis=0)
        flag_subset = d_subset < config.threshold

    return AttentionSeries(
        participants=session.participants,
        timestamps=session.grid.timestamps,
        d_all=d_all,
        d_subset=d_subset,
        excluded_index=excluded,
        flag_all=d_all < config.threshold,
        flag_subset=flag_subset,
        config=config,
    )


def windowed_share(
    flags: np.ndarray | Sequence[bool],
    grid: UniformGrid,
    window_s: float,
    stride_s: float | None = None,
) -> WindowShares:
    """Share of True flags per window.

    Windows are half-open ``[start, start + window)`` in ms, the first one
    anchored at the grid start; by default they tumble (stride == window) and
    the final partial window keeps its own point count. A stride shorter than
    the window produces overlapping (sliding) windows instead.
    """
    f = np.asarray(flags, dtype=bool)
    if f.shape != grid.timestamps.shape:
        raise ValueError(f"flags length {f.size} does not match grid length {len(grid)}")
    window_ms = window_s * 1000.0
    stride_ms = window_ms if stride_s is None else stride_s * 1000.0
    if window_ms < grid.step_ms:
        raise ValueError(
            f"window of {window_s} s is shorter than the grid step ({grid.step_ms} ms)"
        )
    t = grid.timestamps
    cum = np.concatenate(([0], np.cumsum(f)))

    starts: list[float] = []
    k = 0
    while t[0] + k * stride_ms <= t[-1] + 1e-9:
        starts.append(t[0] + k * stride_ms)
        k += 1
    start_arr = np.asarray(starts)
    end_arr = start_arr + window_ms
    lo = np.searchsorted(t, start_arr - 1e-9, side="left")
    hi = np.searchsorted(t, end_arr - 1e-9, side="left")
    counts = hi - lo
    keep = counts > 0  # a trailing sliding window can be empty; drop it
    lo, hi, counts = lo[keep], hi[keep], counts[keep]
    shares = (cum[hi] - cum[lo]) / counts
    return WindowShares(
        start_ms=start_arr[keep],
        end_ms=end_arr[keep],
        share_all=shares,
        share_subset=None,
        point_counts=counts,
    )


def attention_series(session: AlignedSession, config: AttentionConfig) -> AttentionSeries:
    """Full result: flags plus windowed shares for both flag series."""
    series = attention_flags(session, config)
    windows_all = windowed_share(series.flag_all, session.grid, config.window_s, config.stride_s)
    share_subset = None
    if series.flag_subset is not None:
        windows_subset = windowed_share(
            series.flag_subset, session.grid, config.window_s, config.stride_s
        )
        share_subset = windows_subset.share_all
    windows = WindowShares(
        start_ms=windows_all.start_ms,
        end_ms=windows_all.end_ms,
        share_all=windows_all.share_all,
        share_subset=share_subset,
        point_counts=windows_all.point_counts,
    )
    return AttentionSeries(
        participants=series.participants,
        timestamps=series.timestamps,
        d_all=series.d_all,
        d_subset=series.d_subset,
        excluded_index=series.excluded_index,
        flag_all=series.flag_all,
        flag_subset=series.flag_subset,
        config=config,
        windows=windows,
    )


def _config_comments(config: AttentionConfig) -> str:
    return (
        f"# threshold={fmt_num(config.threshold)}\n"
        f"# window_s={fmt_num(config.window_s)}\n"
        f"# stride_s={fmt_num(config.effective_stride_s)}\n"
        f"# rate_hz={fmt_num(config.rate_hz)}\n"
    )


def series_to_csv(series: AttentionSeries) -> str:
    """Timestamp-level export with the effective config echoed as # comments."""
    out = io.StringIO()
    out.write(_config_comments(series.config))
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(SERIES_HEADER)
    has_subset = series.d_subset is not None
    for i, t in enumerate(series.timestamps):
        writer.writerow(
            [
                fmt_num(t),
                fmt_num(series.d_all[i]),
                fmt_num(series.d_subset[i]) if has_subset else "",
                series.excluded_label(i) if has_subset else "",
                fmt_bool(series.flag_all[i]),
                fmt_bool(series.flag_subset[i]) if has_subset else "",
            ]
        )
    return out.getvalue()


def windows_to_csv(series: AttentionSeries) -> str:
    """Window-level export (share per window), config echoed as # comments."""
    if series.windows is None:
        raise ValueError("windowed shares have not been computed for this series")
    out = io.StringIO()
    out.write(_config_comments(series.config))
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(WINDOWS_HEADER)
    w = series.windows
    for i in range(len(w.start_ms)):
        writer.writerow(
            [
                fmt_num(w.start_ms[i]),
                fmt_num(w.end_ms[i]),
                fmt_num(w.share_all[i]),
                fmt_num(w.share_subset[i]) if w.share_subset is not None else "",
            ]
        )
    return out.getvalue()
