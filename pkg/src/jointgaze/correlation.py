"""Spearman rank correlation between participants' gaze series.

Spearman's rho is computed as the Pearson correlation of tie-averaged ranks.
The popular 6*sum(d^2)/(n(n^2-1)) shortcut is wrong in the presence of ties,
and ties do occur here: interpolated traces clamp to 0 and 1, producing runs
of identical values. A constant series has no defined rank correlation; such
cells carry NaN and are rendered as empty/grey rather than coerced to 0.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from typing import TYPE_CHECKING, Sequence

import numpy as np

from .util import fmt_num

if TYPE_CHECKING:
    from .timeline import AlignedSession

AXES = ("x", "y")

#: Marker for "correlation undefined" (constant input series).
UNDEFINED = math.nan


@dataclass(frozen=True, eq=False)
class CorrelationMatrix:
    axis: str
    participants: tuple[str, ...]
    rho: np.ndarray  # (n, n), symmetric, unit diagonal, NaN where undefined


def rank_with_ties(values: Sequence[float] | np.ndarray) -> np.ndarray:
    """1-based ranks; tied values share the average of the ranks they span.

    [5, 5, 9] -> [1.5, 1.5, 3].
    """
    v = np.asarray(values, dtype=np.float64)
    if v.ndim != 1 or v.size == 0:
        raise ValueError("rank_with_ties expects a non-empty 1-D series")
    if not np.all(np.isfinite(v)):
        raise ValueError("rank_with_ties: series contains non-finite values")
    order = np.argsort(v, kind="stable")
    sv = v[order]
    # tie-group boundaries in the sorted view
    starts = np.flatnonzero(np.concatenate(([True], sv[1:] != sv[:-1])))
    ends = np.concatenate((starts[1:], [v.size]))
    group_rank = (starts + ends + 1) / 2.0  # mean of 1-based ranks start+1 .. end
    ranks = np.empty(v.size, dtype=np.float64)
    ranks[order] = np.repeat(group_rank, ends - starts)
    return ranks


def spearman_rho(a: Sequence[float] | np.ndarray, b: Sequence[float] | np.ndarray) -> float:
    """Spearman's rho of two equal-length series; NaN when either is constant."""
    ra_in = np.asarray(a, dtype=np.float64)
    rb_in = np.asarray(b, dtype=np.float64)
    if ra_in.shape != rb_in.shape:
        raise ValueError(f"series length mismatch: {ra_in.shape} vs {rb_in.shape}")
    if ra_in.size < 2:
        raise ValueError("spearman_rho needs at least 2 values")
    ra = rank_with_ties(ra_in)
    rb = rank_with_ties(rb_in)
    da = ra - ra.mean()
    db = rb - rb.mean()
    ssa = float(da @ da)
    ssb = float(db @ db)
    if ssa == 0.0 or ssb == 0.0:
        return UNDEFINED
    rho = float(da @ db) / math.sqrt(ssa * ssb)
    return min(1.0, max(-1.0, rho))  # guard float round-off at the extremes


def correlation_matrix(
    session: AlignedSession,
    axis: str,
    interval_ms: tuple[float, float] | None = None,
) -> CorrelationMatrix:
    """Pairwise Spearman matrix over one axis.

    ``interval_ms`` optionally restricts the computation to grid timestamps
    within the closed sub-interval, for focused analyses of shorter windows.
    """
    if axis not in AXES:
        raise ValueError(f"axis must be one of {AXES}, got {axis!r}")
    series = [tr.x if axis == "x" else tr.y for tr in session.traces]
    if interval_ms is not None:
        lo, hi = interval_ms
        mask = (session.grid.timestamps >= lo) & (session.grid.timestamps <= hi)
        if np.count_nonzero(mask) < 2:
            raise ValueError(f"sub-interval [{lo}, {hi}] ms covers fewer than 2 grid points")
        series = [s[mask] for s in series]
    n = len(series)
    rho = np.eye(n, dtype=np.float64)
    ranks = [rank_with_ties(s) for s in series]
    for i in range(n):
        for j in range(i + 1, n):
            da = ranks[i] - ranks[i].mean()
            db = ranks[j] - ranks[j].mean()
            ssa = float(da @ da)
            ssb = float(db @ db)
            if ssa == 0.0 or ssb == 0.0:
                value = UNDEFINED
            else:
                value = min(1.0, max(-1.0, float(da @ db) / math.sqrt(ssa * ssb)))
            rho[i, j] = value
            rho[j, i] = value
    return CorrelationMatrix(axis=axis, participants=session.participants, rho=rho)


def matrix_to_csv(matrix: CorrelationMatrix) -> str:
    """Participant labels as header row and first column; undefined cells empty."""
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(["", *matrix.participants])
    for i, participant in enumerate(matrix.participants):
        row: list[str] = [participant]
        for value in matrix.rho[i]:
            row.append("" if math.isnan(value) else fmt_num(value))
        writer.writerow(row)
    return out.getvalue()


def matrix_from_csv(text: str, axis: str = "x") -> CorrelationMatrix:
    reader = csv.reader(io.StringIO(text))
    header = next(reader)
    participants = tuple(header[1:])
    n = len(participants)
    rho = np.full((n, n), UNDEFINED, dtype=np.float64)
    for i, row in enumerate(reader):
        if row[0] != participants[i]:
            raise ValueError(f"matrix row label {row[0]!r} does not match header order")
        for j, cell in enumerate(row[1:]):
            if cell != "":
                rho[i, j] = float(cell)
    return CorrelationMatrix(axis=axis, participants=participants, rho=rho)
