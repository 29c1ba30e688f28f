"""Deterministic SVG 1.1 diagnostic plots (800 x 600, no external assets).

Every number written to the file goes through :func:`_f`, so identical
inputs give byte-identical documents.
"""
from __future__ import annotations

import math
from pathlib import Path
from xml.sax.saxutils import escape

import numpy as np

from .errors import InvalidParameterError

WIDTH, HEIGHT = 800, 600
LEFT, RIGHT, TOP, BOTTOM = 90, 40, 50, 70
PLOT_KINDS = ("actual_vs_predicted", "residual", "qq", "roc", "confusion_heatmap", "contour",
              "surface_isometric", "correlation_heatmap", "feature_importance_bars")
MARKER = "#1f77b4"
REFERENCE = "#d62728"


def _f(v) -> str:
    s = f"{float(v):.2f}"
    return "0.00" if s == "-0.00" else s


def _label(v) -> str:
    v = float(v)
    if v == 0:
        return "0"
    return f"{v:.4g}"


def nice_ticks(lo, hi, n=5):
    """Round-number ticks covering ``[lo, hi]``."""
    if not (math.isfinite(lo) and math.isfinite(hi)):
        raise InvalidParameterError("axis limits must be finite")
    if hi <= lo:
        lo, hi = lo - 0.5, hi + 0.5
    raw = (hi - lo) / max(n - 1, 1)
    mag = 10.0 ** math.floor(math.log10(raw))
    step = next(m * mag for m in (1, 2, 2.5, 5, 10) if m * mag >= raw)
    first = math.floor(lo / step) * step
    ticks = []
    k = 0
    while True:
        t = first + k * step
        ticks.append(round(t, 12))
        if t >= hi - 1e-12 * step:
            break
        k += 1
    return ticks


class _Canvas:
    def __init__(self, title):
        self.parts = []
        self.title = title

    def add(self, s):
        self.parts.append(s)

    def line(self, x1, y1, x2, y2, stroke="#000000", width=1.0, extra=""):
        self.add(f'<line x1="{_f(x1)}" y1="{_f(y1)}" x2="{_f(x2)}" y2="{_f(y2)}" stroke="{stroke}" '
                 f'stroke-width="{_f(width)}"{extra}/>')

    def text(self, x, y, s, anchor="middle", size=12, extra=""):
        self.add(f'<text x="{_f(x)}" y="{_f(y)}" font-family="sans-serif" font-size="{size}" '
                 f'text-anchor="{anchor}"{extra}>{escape(str(s))}</text>')

    def rect(self, x, y, w, h, fill, stroke="none"):
        self.add(f'<rect x="{_f(x)}" y="{_f(y)}" width="{_f(w)}" height="{_f(h)}" fill="{fill}" stroke="{stroke}"/>')

    def circle(self, cx, cy, r=3.5, fill=MARKER, cls="marker"):
        self.add(f'<circle class="{cls}" cx="{_f(cx)}" cy="{_f(cy)}" r="{_f(r)}" fill="{fill}" fill-opacity="0.8"/>')

    def polygon(self, pts, fill, stroke="#333333"):
        coords = " ".join(f"{_f(x)},{_f(y)}" for x, y in pts)
        self.add(f'<polygon points="{coords}" fill="{fill}" stroke="{stroke}" stroke-width="0.5"/>')

    def polyline(self, pts, stroke, width=2.0, cls="curve"):
        coords = " ".join(f"{_f(x)},{_f(y)}" for x, y in pts)
        self.add(f'<polyline class="{cls}" points="{coords}" fill="none" stroke="{stroke}" stroke-width="{_f(width)}"/>')

    def render(self) -> str:
        head = ('<?xml version="1.0" encoding="UTF-8" standalone="no"?>\n'
                f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{WIDTH}" height="{HEIGHT}" '
                f'viewBox="0 0 {WIDTH} {HEIGHT}">\n'
                f'<title>{escape(self.title)}</title>\n'
                f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="#ffffff"/>\n')
        return head + "\n".join(self.parts) + "\n</svg>\n"


class _Axes:
    """Linear data-to-pixel map for the standard plot area."""

    def __init__(self, xlim, ylim):
        self.xt = nice_ticks(*xlim)
        self.yt = nice_ticks(*ylim)
        self.x0, self.x1 = self.xt[0], self.xt[-1]
        self.y0, self.y1 = self.yt[0], self.yt[-1]

    def px(self, x):
        return LEFT + (x - self.x0) / (self.x1 - self.x0) * (WIDTH - LEFT - RIGHT)

    def py(self, y):
        return HEIGHT - BOTTOM - (y - self.y0) / (self.y1 - self.y0) * (HEIGHT - TOP - BOTTOM)

    def draw(self, c: _Canvas, xlabel, ylabel):
        bx, by = LEFT, HEIGHT - BOTTOM
        c.line(bx, by, WIDTH - RIGHT, by)
        c.line(bx, by, bx, TOP)
        for t in self.xt:
            x = self.px(t)
            c.line(x, by, x, by + 5)
            c.text(x, by + 20, _label(t))
        for t in self.yt:
            y = self.py(t)
            c.line(bx - 5, y, bx, y)
            c.text(bx - 8, y + 4, _label(t), anchor="end")
        c.text((LEFT + WIDTH - RIGHT) / 2, HEIGHT - 20, xlabel, size=14)
        c.text(25, (TOP + HEIGHT - BOTTOM) / 2, ylabel, size=14,
               extra=f' transform="rotate(-90 25 {_f((TOP + HEIGHT - BOTTOM) / 2)})"')


def _vec(data, key):
    if key not in data:
        raise InvalidParameterError(f"plot data needs {key!r}")
    v = np.asarray(data[key], dtype=float)
    if v.size == 0:
        raise InvalidParameterError(f"plot data {key!r} is empty")
    if not np.all(np.isfinite(v)):
        raise InvalidParameterError(f"plot data {key!r} has non-finite values")
    return v


def _limits(*arrays):
    lo = min(float(a.min()) for a in arrays)
    hi = max(float(a.max()) for a in arrays)
    return lo, hi


def _colour(t):
    """Blue-white-red ramp for ``t`` in [0, 1]."""
    t = min(max(float(t), 0.0), 1.0)
    if t < 0.5:
        s = t / 0.5
        r, g, b = 59 + s * (247 - 59), 76 + s * (247 - 76), 192 + s * (247 - 192)
    else:
        s = (t - 0.5) / 0.5
        r, g, b = 247 + s * (180 - 247), 247 + s * (4 - 247), 247 + s * (38 - 247)
    return f"#{int(round(r)):02x}{int(round(g)):02x}{int(round(b)):02x}"


def _scatter(c, xs, ys, xlabel, ylabel, lims=None):
    ax = _Axes(*(lims or (_limits(xs), _limits(ys))))
    ax.draw(c, xlabel, ylabel)
    for x, y in zip(xs, ys):
        c.circle(ax.px(x), ax.py(y))
    return ax


def _actual_vs_predicted(c, data):
    a, p = _vec(data, "actual"), _vec(data, "predicted")
    if a.shape != p.shape:
        raise InvalidParameterError("actual and predicted differ in length")
    lim = _limits(a, p)
    ax = _Axes(lim, lim)
    lo, hi = ax.x0, ax.x1
    c.line(ax.px(lo), ax.py(lo), ax.px(hi), ax.py(hi), REFERENCE, 1.5, ' class="reference"')
    ax.draw(c, data.get("xlabel", "Actual"), data.get("ylabel", "Predicted"))
    for x, y in zip(a, p):
        c.circle(ax.px(x), ax.py(y))


def _residual(c, data):
    p, r = _vec(data, "predicted"), _vec(data, "residual")
    lo, hi = _limits(r)
    m = max(abs(lo), abs(hi))
    ax = _scatter(c, p, r, "Predicted", "Residual", (_limits(p), (-m, m)))
    c.line(ax.px(ax.x0), ax.py(0.0), ax.px(ax.x1), ax.py(0.0), REFERENCE, 1.5, ' class="reference"')


def _qq(c, data):
    pts = _vec(data, "points").reshape(-1, 2)
    q, z = pts[:, 0], pts[:, 1]
    lim = _limits(q, z)
    ax = _scatter(c, q, z, "Theoretical quantile", "Standardized residual", (lim, lim))
    c.line(ax.px(ax.x0), ax.py(ax.x0), ax.px(ax.x1), ax.py(ax.x1), REFERENCE, 1.5, ' class="reference"')


def _roc(c, data):
    pts = _vec(data, "points").reshape(-1, 2)
    ax = _Axes((0.0, 1.0), (0.0, 1.0))
    ax.draw(c, "False positive rate", "True positive rate")
    c.line(ax.px(0), ax.py(0), ax.px(1), ax.py(1), "#999999", 1.0, ' stroke-dasharray="4 4"')
    c.polyline([(ax.px(x), ax.py(y)) for x, y in pts], MARKER)
    if data.get("auc") is not None:
        c.text(WIDTH - RIGHT - 10, HEIGHT - BOTTOM - 15, f"AUC = {float(data['auc']):.4f}", anchor="end", size=14)


def _heatmap(c, values, row_labels, col_labels, vmin, vmax, fmt):
    n_r, n_c = values.shape
    size = min((WIDTH - LEFT - RIGHT - 60) / n_c, (HEIGHT - TOP - BOTTOM) / n_r)
    x0 = LEFT + 60
    span = vmax - vmin if vmax > vmin else 1.0
    for i in range(n_r):
        for j in range(n_c):
            v = values[i, j]
            c.rect(x0 + j * size, TOP + i * size, size, size, _colour((v - vmin) / span), "#ffffff")
            c.text(x0 + (j + 0.5) * size, TOP + (i + 0.5) * size + 4, fmt(v), size=max(8, min(14, int(size / 4))))
    for i, lab in enumerate(row_labels):
        c.text(x0 - 6, TOP + (i + 0.5) * size + 4, lab, anchor="end", size=11)
    for j, lab in enumerate(col_labels):
        c.text(x0 + (j + 0.5) * size, TOP + n_r * size + 16, lab, size=11)


def _confusion(c, data):
    m = _vec(data, "matrix").reshape(2, 2)
    _heatmap(c, m, ["true 0", "true 1"], ["pred 0", "pred 1"], 0.0, float(m.max()), lambda v: str(int(v)))


def _correlation(c, data):
    m = _vec(data, "values")
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise InvalidParameterError("correlation matrix must be square")
    labels = [str(x) for x in data.get("labels", range(m.shape[0]))]
    _heatmap(c, m, labels, labels, -1.0, 1.0, lambda v: f"{v:.2f}")


def _bars(c, data):
    v = _vec(data, "values")
    labels = [str(x) for x in data.get("labels", range(v.size))]
    ax = _Axes((0.0, max(float(v.max()), 1e-12)), (0.0, 1.0))
    bx, by = LEFT + 80, HEIGHT - BOTTOM
    h = (by - TOP) / v.size
    w_full = WIDTH - RIGHT - bx
    c.line(bx, by, WIDTH - RIGHT, by)
    c.line(bx, by, bx, TOP)
    for t in ax.xt:
        x = bx + (t - ax.x0) / (ax.x1 - ax.x0) * w_full
        c.line(x, by, x, by + 5)
        c.text(x, by + 20, _label(t))
    for i, (lab, val) in enumerate(zip(labels, v)):
        y = TOP + i * h
        c.rect(bx, y + 0.15 * h, max(val, 0.0) / ax.x1 * w_full, 0.7 * h, MARKER)
        c.text(bx - 6, y + 0.5 * h + 4, lab, anchor="end", size=11)
    c.text((bx + WIDTH - RIGHT) / 2, HEIGHT - 20, data.get("xlabel", "Importance"), size=14)


def _grid(data):
    g = _vec(data, "grid")
    if g.ndim != 2 or min(g.shape) < 2:
        raise InvalidParameterError("grid must be at least 2 x 2")
    xs = _vec(data, "x") if "x" in data else np.arange(g.shape[0], dtype=float)
    ys = _vec(data, "y") if "y" in data else np.arange(g.shape[1], dtype=float)
    return g, xs, ys


def _contour(c, data):
    g, xs, ys = _grid(data)
    ax = _Axes(_limits(xs), _limits(ys))
    lo, hi = float(g.min()), float(g.max())
    span = hi - lo if hi > lo else 1.0
    for i in range(len(xs) - 1):
        for j in range(len(ys) - 1):
            mean = (g[i, j] + g[i + 1, j] + g[i, j + 1] + g[i + 1, j + 1]) / 4
            x_a, x_b = ax.px(xs[i]), ax.px(xs[i + 1])
            y_a, y_b = ax.py(ys[j + 1]), ax.py(ys[j])
            c.rect(x_a, y_a, x_b - x_a, y_b - y_a, _colour((mean - lo) / span))
    if hi > lo:
        for level in np.linspace(lo, hi, 9)[1:-1]:
            for seg in _iso_segments(g, xs, ys, level):
                (xa, ya), (xb, yb) = seg
                c.line(ax.px(xa), ax.py(ya), ax.px(xb), ax.py(yb), "#222222", 0.8)
    ax.draw(c, data.get("xlabel", "x"), data.get("ylabel", "y"))


def _iso_segments(g, xs, ys, level):
    """Marching squares, one or two segments per cell."""
    segs = []
    for i in range(len(xs) - 1):
        for j in range(len(ys) - 1):
            corners = [(xs[i], ys[j], g[i, j]), (xs[i + 1], ys[j], g[i + 1, j]),
                       (xs[i + 1], ys[j + 1], g[i + 1, j + 1]), (xs[i], ys[j + 1], g[i, j + 1])]
            pts = []
            for k in range(4):
                xa, ya, va = corners[k]
                xb, yb, vb = corners[(k + 1) % 4]
                if (va < level) != (vb < level):
                    s = (level - va) / (vb - va)
                    pts.append((xa + s * (xb - xa), ya + s * (yb - ya)))
            if len(pts) == 2:
                segs.append((pts[0], pts[1]))
            elif len(pts) == 4:
                segs.append((pts[0], pts[1]))
                segs.append((pts[2], pts[3]))
    return segs


def _surface(c, data):
    g, xs, ys = _grid(data)
    m, n = g.shape
    lo, hi = float(g.min()), float(g.max())
    span = hi - lo if hi > lo else 1.0
    cos30, sin30 = math.cos(math.pi / 6), 0.5
    u = np.linspace(0.0, 1.0, m)
    v = np.linspace(0.0, 1.0, n)
    scale = 300.0
    cx, cy = WIDTH / 2, HEIGHT - BOTTOM - 40

    def proj(i, j):
        a, b = u[i], v[j]
        h = (g[i, j] - lo) / span
        return cx + (a - b) * cos30 * scale, cy - (a + b) * sin30 * scale - h * 200.0

    # far cells first: larger i + j sits further back in this projection
    cells = sorted(((i, j) for i in range(m - 1) for j in range(n - 1)), key=lambda ij: (-(ij[0] + ij[1]), ij))
    for i, j in cells:
        mean = (g[i, j] + g[i + 1, j] + g[i, j + 1] + g[i + 1, j + 1]) / 4
        c.polygon([proj(i, j), proj(i + 1, j), proj(i + 1, j + 1), proj(i, j + 1)], _colour((mean - lo) / span))
    ox, oy = cx, cy
    c.line(ox, oy, ox + cos30 * scale, oy - sin30 * scale)
    c.line(ox, oy, ox - cos30 * scale, oy - sin30 * scale)
    for t, val in ((0.0, xs[0]), (1.0, xs[-1])):
        c.text(ox + t * cos30 * scale + 10, oy - t * sin30 * scale + 18, _label(val), anchor="start")
    for t, val in ((0.0, ys[0]), (1.0, ys[-1])):
        c.text(ox - t * cos30 * scale - 10, oy - t * sin30 * scale + 18, _label(val), anchor="end")
    c.text(ox + 0.5 * cos30 * scale + 30, oy - 0.5 * sin30 * scale + 35, data.get("xlabel", "x"), size=14)
    c.text(ox - 0.5 * cos30 * scale - 30, oy - 0.5 * sin30 * scale + 35, data.get("ylabel", "y"), size=14)
    c.text(WIDTH - RIGHT, TOP + 20, f"min {_label(lo)}  max {_label(hi)}", anchor="end", size=12)


_RENDER = {
    "actual_vs_predicted": _actual_vs_predicted,
    "residual": _residual,
    "qq": _qq,
    "roc": _roc,
    "confusion_heatmap": _confusion,
    "contour": _contour,
    "surface_isometric": _surface,
    "correlation_heatmap": _correlation,
    "feature_importance_bars": _bars,
}


def render_svg(kind: str, data: dict) -> str:
    if kind not in _RENDER:
        raise InvalidParameterError(f"unknown plot kind {kind!r}")
    if not data:
        raise InvalidParameterError("plot data is empty")
    c = _Canvas(data.get("title", kind.replace("_", " ")))
    c.text(WIDTH / 2, 28, c.title, size=16)
    _RENDER[kind](c, data)
    return c.render()


def emit_svg(kind: str, data: dict, path) -> Path:
    """Render ``kind`` and write it to ``path`` (LF line endings, UTF-8)."""
    text = render_svg(kind, data)
    path = Path(path)
    with path.open("w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)
    return path
