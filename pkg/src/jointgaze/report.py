"""Chart and table emitters: scatter over time, correlation heatmap, share curves.

Charts are rendered as self-contained SVG, which keeps outputs deterministic
and diffable in CI; every chart gets a CSV twin holding exactly the plotted
values. Files are written atomically (temp + rename).
"""

from __future__ import annotations

import csv
import io
import math
from pathlib import Path
from typing import TYPE_CHECKING, Iterable, Sequence
from xml.sax.saxutils import escape

from .correlation import matrix_to_csv
from .attention import windows_to_csv
from .util import fmt_num, write_atomic

if TYPE_CHECKING:
    from .attention import AttentionSeries
    from .correlation import CorrelationMatrix
    from .timeline import AlignedSession

# Okabe-Ito palette: distinguishable under the common colour-vision deficiencies.
PARTICIPANT_COLORS = (
    "#0072B2",
    "#E69F00",
    "#009E73",
    "#CC79A7",
    "#D55E00",
    "#56B4E9",
    "#F0E442",
    "#000000",
)
_GREY = "#bdbdbd"

DIAGNOSTICS_HEADER = ("scope", "metric", "value")


def _svg_doc(width: int, height: int, body: Iterable[str]) -> str:
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}" font-family="sans-serif">',
        f'<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>',
    ]
    parts.extend(body)
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def _nice_ticks(lo: float, hi: float, target: int = 6) -> list[float]:
    if hi <= lo:
        return [lo]
    raw = (hi - lo) / max(target, 2)
    mag = 10.0 ** math.floor(math.log10(raw))
    for m in (1.0, 2.0, 5.0, 10.0):
        if raw <= m * mag:
            step = m * mag
            break
    first = math.ceil(lo / step) * step
    ticks = []
    v = first
    while v <= hi + step * 1e-9:
        ticks.append(round(v, 12))
        v += step
    return ticks


def _tick_label(v: float) -> str:
    return fmt_num(round(v, 9))


class _Frame:
    """Maps data coordinates onto a pixel plot area and draws the axes."""

    def __init__(self, width, height, margin_l, margin_r, margin_t, margin_b, x_range, y_range):
        self.width = width
        self.height = height
        self.l, self.r, self.t, self.b = margin_l, margin_r, margin_t, margin_b
        self.x0, self.x1 = x_range
        self.y0, self.y1 = y_range

    def px(self, x: float) -> float:
        span = self.x1 - self.x0
        frac = 0.0 if span == 0 else (x - self.x0) / span
        return self.l + frac * (self.width - self.l - self.r)

    def py(self, y: float) -> float:
        span = self.y1 - self.y0
        frac = 0.0 if span == 0 else (y - self.y0) / span
        return self.height - self.b - frac * (self.height - self.t - self.b)

    def axes(self, x_label: str, y_label: str) -> list[str]:
        out = []
        bottom = self.height - self.b
        right = self.width - self.r
        for xv in _nice_ticks(self.x0, self.x1):
            x = self.px(xv)
            out.append(
                f'<line x1="{x:.2f}" y1="{self.t}" x2="{x:.2f}" y2="{bottom}" '
                'stroke="#eeeeee" stroke-width="1"/>'
            )
            out.append(
                f'<text x="{x:.2f}" y="{bottom + 16}" font-size="11" fill="#444" '
                f'text-anchor="middle">{_tick_label(xv)}</text>'
            )
        for yv in _nice_ticks(self.y0, self.y1, target=5):
            y = self.py(yv)
            out.append(
                f'<line x1="{self.l}" y1="{y:.2f}" x2="{right}" y2="{y:.2f}" '
                'stroke="#eeeeee" stroke-width="1"/>'
            )
            out.append(
                f'<text x="{self.l - 6}" y="{y + 4:.2f}" font-size="11" fill="#444" '
                f'text-anchor="end">{_tick_label(yv)}</text>'
            )
        out.append(
            f'<rect x="{self.l}" y="{self.t}" width="{right - self.l}" '
            f'height="{bottom - self.t}" fill="none" stroke="#888" stroke-width="1"/>'
        )
        out.append(
            f'<text x="{(self.l + right) / 2:.2f}" y="{self.height - 8}" font-size="12" '
            f'fill="#222" text-anchor="middle">{escape(x_label)}</text>'
        )
        out.append(
            f'<text x="14" y="{(self.t + bottom) / 2:.2f}" font-size="12" fill="#222" '
            f'text-anchor="middle" transform="rotate(-90 14 {(self.t + bottom) / 2:.2f})">'
            f"{escape(y_label)}</text>"
        )
        return out


def _legend(entries: Sequence[tuple[str, str]], x: float, y: float) -> list[str]:
    out = []
    for i, (label, color) in enumerate(entries):
        yy = y + i * 18
        out.append(f'<rect x="{x:.2f}" y="{yy - 9}" width="12" height="12" fill="{color}"/>')
        out.append(
            f'<text x="{x + 17:.2f}" y="{yy + 1}" font-size="12" fill="#222">{escape(label)}</text>'
        )
    return out


def _title(text: str, width: int) -> str:
    return (
        f'<text x="{width / 2}" y="20" font-size="14" fill="#111" '
        f'text-anchor="middle">{escape(text)}</text>'
    )


def _csv_twin_path(svg_path: Path) -> Path:
    return svg_path.with_suffix(".csv")


def _axis_word(axis: str) -> str:
    return "horizontal" if axis == "x" else "vertical"


def emit_scatter(session: AlignedSession, axis: str, svg_path: str | Path) -> tuple[Path, Path]:
    """Scatter of one axis' gaze values over time, one colour per participant."""
    if axis not in ("x", "y"):
        raise ValueError(f"axis must be 'x' or 'y', got {axis!r}")
    svg_path = Path(svg_path)
    t = session.grid.timestamps
    t_s = (t - session.grid.start_ms) / 1000.0

    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(["timestamp_ms", "participant", axis])
    for trace in session.traces:
        values = trace.x if axis == "x" else trace.y
        for i in range(len(t)):
            writer.writerow([fmt_num(t[i]), trace.participant, fmt_num(values[i])])
    csv_text = out.getvalue()

    frame = _Frame(960, 360, 55, 150, 40, 45, (0.0, float(t_s[-1]) or 1.0), (0.0, 1.0))
    body = [_title(f"{session.session_id}: {_axis_word(axis)} gaze over time", 960)]
    body.extend(frame.axes("time (s)", f"normalised {axis}"))
    entries = []
    for k, trace in enumerate(session.traces):
        color = PARTICIPANT_COLORS[k % len(PARTICIPANT_COLORS)]
        entries.append((trace.participant, color))
        values = trace.x if axis == "x" else trace.y
        pts = [
            f'<circle cx="{frame.px(t_s[i]):.2f}" cy="{frame.py(values[i]):.2f}" r="1.6"/>'
            for i in range(len(t))
        ]
        body.append(f'<g fill="{color}" fill-opacity="0.75">' + "".join(pts) + "</g>")
    body.extend(_legend(entries, 960 - 140, 52))

    write_atomic(_csv_twin_path(svg_path), csv_text)
    write_atomic(svg_path, _svg_doc(960, 360, body))
    return svg_path, _csv_twin_path(svg_path)


def _diverging_color(v: float) -> str:
    if math.isnan(v):
        return _GREY
    v = min(1.0, max(-1.0, v))
    if v >= 0:
        hi = (129, 15, 21)  # darkest red at rho = +1
    else:
        hi = (8, 48, 107)  # darkest blue at rho = -1
    a = abs(v)
    r, g, b = (round(255 + (c - 255) * a) for c in hi)
    return f"#{r:02x}{g:02x}{b:02x}"


def emit_matrix(matrix: CorrelationMatrix, svg_path: str | Path) -> tuple[Path, Path]:
    """Heatmap of a correlation matrix, each cell annotated to 2 decimals."""
    svg_path = Path(svg_path)
    n = len(matrix.participants)
    cell = 64
    gutter_l, gutter_t = 110, 64
    width = gutter_l + n * cell + 30
    height = gutter_t + n * cell + 24

    body = [_title(f"Spearman rho, {_axis_word(matrix.axis)} gaze", width)]
    for j, label in enumerate(matrix.participants):
        x = gutter_l + j * cell + cell / 2
        body.append(
            f'<text x="{x}" y="{gutter_t - 8}" font-size="12" fill="#222" '
            f'text-anchor="middle">{escape(label)}</text>'
        )
    for i, label in enumerate(matrix.participants):
        y = gutter_t + i * cell + cell / 2
        body.append(
            f'<text x="{gutter_l - 8}" y="{y + 4}" font-size="12" fill="#222" '
            f'text-anchor="end">{escape(label)}</text>'
        )
        for j in range(n):
            v = float(matrix.rho[i, j])
            x = gutter_l + j * cell
            y0 = gutter_t + i * cell
            body.append(
                f'<rect x="{x}" y="{y0}" width="{cell}" height="{cell}" '
                f'fill="{_diverging_color(v)}" stroke="white" stroke-width="1"/>'
            )
            if not math.isnan(v):
                text_fill = "white" if abs(v) > 0.55 else "#111"
                body.append(
                    f'<text x="{x + cell / 2}" y="{y0 + cell / 2 + 4}" font-size="13" '
                    f'fill="{text_fill}" text-anchor="middle">{v:.2f}</text>'
                )

    write_atomic(_csv_twin_path(svg_path), matrix_to_csv(matrix))
    write_atomic(svg_path, _svg_doc(width, height, body))
    return svg_path, _csv_twin_path(svg_path)


def _step_path(frame: _Frame, xs: Sequence[float], xe: Sequence[float], ys: Sequence[float]) -> str:
    d = [f"M {frame.px(xs[0]):.2f} {frame.py(ys[0]):.2f}"]
    for i in range(len(xs)):
        if i > 0:
            d.append(f"V {frame.py(ys[i]):.2f}")
        d.append(f"H {frame.px(xe[i]):.2f}")
    return " ".join(d)


def emit_share_plot(series: AttentionSeries, svg_path: str | Path) -> tuple[Path, Path]:
    """Step curves of the all-participants and best-subset shares per window."""
    if series.windows is None:
        raise ValueError("attention series has no windowed shares to plot")
    svg_path = Path(svg_path)
    w = series.windows
    start_s = (w.start_ms - w.start_ms[0]) / 1000.0
    end_s = (w.end_ms - w.start_ms[0]) / 1000.0

    frame = _Frame(960, 320, 55, 170, 48, 45, (0.0, float(end_s[-1])), (0.0, 1.0))
    n = len(series.participants)
    body = [_title("Share of joint attention over time", 960)]
    cfg = series.config
    subtitle = (
        f"threshold={fmt_num(cfg.threshold)}, window={fmt_num(cfg.window_s)}s, "
        f"stride={fmt_num(cfg.effective_stride_s)}s"
    )
    body.append(
        f'<text x="480" y="36" font-size="11" fill="#555" text-anchor="middle">{escape(subtitle)}</text>'
    )
    body.extend(frame.axes("window start (s)", "share of window"))
    entries = []
    if w.share_subset is not None:
        body.append(
            f'<path d="{_step_path(frame, start_s, end_s, w.share_subset)}" fill="none" '
            f'stroke="#E69F00" stroke-width="2"/>'
        )
        entries.append((f"best {n - 1} of {n}", "#E69F00"))
    body.append(
        f'<path d="{_step_path(frame, start_s, end_s, w.share_all)}" fill="none" '
        f'stroke="#0072B2" stroke-width="2"/>'
    )
    entries.append((f"all {n}", "#0072B2"))
    body.extend(_legend(entries, 960 - 160, 60))

    write_atomic(_csv_twin_path(svg_path), windows_to_csv(series))
    write_atomic(svg_path, _svg_doc(960, 320, body))
    return svg_path, _csv_twin_path(svg_path)


def emit_diagnostics(rows: Sequence[tuple[str, str, object]], csv_path: str | Path) -> Path:
    """Audit counters as a long-format table: scope, metric, value."""
    csv_path = Path(csv_path)
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(DIAGNOSTICS_HEADER)
    for scope, metric, value in rows:
        writer.writerow([scope, metric, fmt_num(value) if isinstance(value, float) else value])
    write_atomic(csv_path, out.getvalue())
    return csv_path
