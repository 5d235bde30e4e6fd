"""Deterministic CSV and self-contained SVG output.

Numbers are written with ``%.12g`` so reruns are byte-identical.  Each CSV
starts with ``#`` comment lines: the first names every column with its
unit, further lines carry run metadata.  SVGs use no external resources.
"""

from __future__ import annotations

import csv
import math
from pathlib import Path
from typing import Iterable, Sequence
from xml.sax.saxutils import escape

import numpy as np

__all__ = ["fmt", "write_csv", "svg_polyline", "svg_heatmap", "write_text"]

WIDTH, HEIGHT = 640, 420
MARGIN = dict(left=70, right=20, top=40, bottom=55)
PALETTE = ("#1f4e9c", "#c0392b", "#2e8b57", "#8e44ad")


def fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, (str, np.str_)):
        return str(value)
    if isinstance(value, (bool, np.bool_)):
        return "1" if value else "0"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    v = float(value)
    if math.isnan(v):
        return "nan"
    return f"{v:.12g}"


def write_csv(
    path: str | Path,
    columns: Sequence[tuple[str, str]],
    rows: Iterable[Sequence],
    meta: Sequence[str] = (),
) -> Path:
    """Write ``rows`` under a ``# name [unit], ...`` header line."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        fh.write("# " + ", ".join(f"{n} [{u}]" for n, u in columns) + "\n")
        for line in meta:
            fh.write(f"# {line}\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow([n for n, _ in columns])
        for row in rows:
            if len(row) != len(columns):
                raise ValueError(f"row has {len(row)} entries, header has {len(columns)}")
            writer.writerow([fmt(v) for v in row])
    return path


def write_text(path: str | Path, text: str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)
    return path


def _range(values: np.ndarray) -> tuple[float, float]:
    lo, hi = float(np.min(values)), float(np.max(values))
    if hi - lo < 1e-300:
        pad = max(abs(lo), 1.0) * 0.05
        return lo - pad, hi + pad
    pad = 0.04 * (hi - lo)
    return lo - pad, hi + pad


def _ticks(lo: float, hi: float, n: int = 5) -> list[float]:
    raw = (hi - lo) / n
    mag = 10 ** math.floor(math.log10(raw))
    step = min((m * mag for m in (1, 2, 5, 10) if m * mag >= raw), default=10 * mag)
    start = math.ceil(lo / step) * step
    out = []
    t = start
    while t <= hi + 1e-12 * step:
        out.append(0.0 if abs(t) < 1e-12 * step else t)
        t += step
    return out


class _Frame:
    """Maps data coordinates into the plot rectangle."""

    def __init__(self, xr, yr):
        self.x0, self.x1 = xr
        self.y0, self.y1 = yr
        self.left = MARGIN["left"]
        self.right = WIDTH - MARGIN["right"]
        self.top = MARGIN["top"]
        self.bottom = HEIGHT - MARGIN["bottom"]

    def px(self, x):
        return self.left + (np.asarray(x) - self.x0) / (self.x1 - self.x0) * (self.right - self.left)

    def py(self, y):
        return self.bottom - (np.asarray(y) - self.y0) / (self.y1 - self.y0) * (self.bottom - self.top)

    def axes(self, xlabel: str, ylabel: str, title: str) -> list[str]:
        parts = [
            f'<rect x="{self.left}" y="{self.top}" width="{self.right - self.left}" '
            f'height="{self.bottom - self.top}" fill="none" stroke="#333" stroke-width="1"/>'
        ]
        for t in _ticks(self.x0, self.x1):
            X = float(self.px(t))
            parts.append(f'<line x1="{X:.2f}" y1="{self.bottom}" x2="{X:.2f}" y2="{self.bottom + 5}" stroke="#333"/>')
            parts.append(f'<text x="{X:.2f}" y="{self.bottom + 18}" text-anchor="middle">{fmt(round(t, 10))}</text>')
        for t in _ticks(self.y0, self.y1):
            Y = float(self.py(t))
            parts.append(f'<line x1="{self.left - 5}" y1="{Y:.2f}" x2="{self.left}" y2="{Y:.2f}" stroke="#333"/>')
            parts.append(f'<text x="{self.left - 8}" y="{Y + 4:.2f}" text-anchor="end">{fmt(round(t, 10))}</text>')
        cx = (self.left + self.right) / 2
        cy = (self.top + self.bottom) / 2
        parts.append(f'<text x="{cx:.1f}" y="{HEIGHT - 12}" text-anchor="middle">{escape(xlabel)}</text>')
        parts.append(
            f'<text x="16" y="{cy:.1f}" text-anchor="middle" transform="rotate(-90 16 {cy:.1f})">{escape(ylabel)}</text>'
        )
        parts.append(f'<text x="{cx:.1f}" y="24" text-anchor="middle" font-size="14">{escape(title)}</text>')
        return parts


def _document(body: list[str]) -> str:
    head = (
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="11">'
    )
    return "\n".join([head, f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>', *body, "</svg>"]) + "\n"


def svg_polyline(
    path: str | Path,
    series: Sequence[tuple[str, Sequence[float], Sequence[float]]],
    xlabel: str,
    ylabel: str,
    title: str = "",
    marker: float | None = None,
) -> Path:
    """Line plot of one or more ``(label, xs, ys)`` series.

    ``marker`` draws a dashed vertical reference line at that x.
    """
    xs_all = np.concatenate([np.asarray(s[1], dtype=float) for s in series])
    ys_all = np.concatenate([np.asarray(s[2], dtype=float) for s in series])
    if marker is not None:
        xs_all = np.append(xs_all, marker)
    frame = _Frame(_range(xs_all), _range(ys_all))
    body = frame.axes(xlabel, ylabel, title)
    if marker is not None:
        X = float(frame.px(marker))
        body.append(
            f'<line x1="{X:.2f}" y1="{frame.top}" x2="{X:.2f}" y2="{frame.bottom}" '
            f'stroke="#888" stroke-dasharray="4 3"/>'
        )
    for i, (label, xs, ys) in enumerate(series):
        color = PALETTE[i % len(PALETTE)]
        pts = " ".join(f"{a:.2f},{b:.2f}" for a, b in zip(frame.px(xs), frame.py(ys)))
        body.append(f'<polyline points="{pts}" fill="none" stroke="{color}" stroke-width="1.6"/>')
        if label:
            y = frame.top + 14 + 14 * i
            body.append(f'<text x="{frame.right - 8}" y="{y}" text-anchor="end" fill="{color}">{escape(label)}</text>')
    return write_text(path, _document(body))


def _color(level: float) -> str:
    # white -> dark blue ramp
    c0, c1 = np.array([255, 255, 255]), np.array([16, 52, 120])
    rgb = np.rint(c0 + (c1 - c0) * min(max(level, 0.0), 1.0)).astype(int)
    return "#{:02x}{:02x}{:02x}".format(*rgb)


def svg_heatmap(
    path: str | Path,
    times: Sequence[float],
    x: Sequence[float],
    values: np.ndarray,
    title: str = "",
    max_cells: tuple[int, int] = (120, 64),
) -> Path:
    """Space-time raster of ``values[time, space]`` drawn as SVG rectangles."""
    times = np.asarray(times, dtype=float)
    x = np.asarray(x, dtype=float)
    values = np.asarray(values, dtype=float)
    ti = np.unique(np.linspace(0, times.size - 1, min(times.size, max_cells[0])).round().astype(int))
    xi = np.unique(np.linspace(0, x.size - 1, min(x.size, max_cells[1])).round().astype(int))
    sub = values[np.ix_(ti, xi)]
    lo, hi = float(np.min(values)), float(np.max(values))
    scale = hi - lo if hi > lo else 1.0
    frame = _Frame((float(times[0]), float(times[-1]) if times[-1] > times[0] else float(times[0]) + 1.0),
                   (float(x[0]), float(x[-1]) if x[-1] > x[0] else float(x[0]) + 1.0))
    body = []
    t_edges = np.concatenate([[times[ti[0]]], 0.5 * (times[ti[1:]] + times[ti[:-1]]), [times[ti[-1]]]])
    x_edges = np.concatenate([[x[xi[0]]], 0.5 * (x[xi[1:]] + x[xi[:-1]]), [x[xi[-1]]]])
    X = frame.px(t_edges)
    Y = frame.py(x_edges)
    for a in range(ti.size):
        for b in range(xi.size):
            w = X[a + 1] - X[a]
            h = Y[b] - Y[b + 1]
            body.append(
                f'<rect x="{X[a]:.2f}" y="{Y[b + 1]:.2f}" width="{max(w, 0.01):.2f}" '
                f'height="{max(h, 0.01):.2f}" fill="{_color((sub[a, b] - lo) / scale)}"/>'
            )
    body += frame.axes("t", "x", title)
    body.append(
        f'<text x="{frame.right}" y="{HEIGHT - 12}" text-anchor="end">'
        f"u range [{fmt(lo)}, {fmt(hi)}]</text>"
    )
    return write_text(path, _document(body))
