"""Report emitters: RFC-4180 CSV tables, JSON manifests, SVG plots.

Everything here is deterministic by construction -- no timestamps, no
absolute paths, fixed number formatting (``%.12g`` for floats) -- so a
rerun of the same experiment reproduces every output file byte for
byte.  The SVG is hand-written markup: a log-log scatter with an
optional fitted line and slope annotation, meant as a quick diagnostic
rather than a publication figure.
"""

import csv
import hashlib
import io
import json
import math
from pathlib import Path

from ..errors import NonpositiveData, OutputUnwritable, TooFewPoints

__all__ = ["emit_plot", "format_value", "write_csv", "write_manifest"]


def format_value(v):
    """Render one CSV cell: floats as %.12g, blanks for None/''."""
    if v is None or (isinstance(v, str) and v == ""):
        return ""
    if isinstance(v, bool):
        return "yes" if v else "no"
    if isinstance(v, int):
        return str(v)
    if isinstance(v, float):
        return format(v, ".12g")
    return str(v)


def _write_bytes(path, data):
    try:
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        Path(path).write_bytes(data)
    except OSError as exc:
        raise OutputUnwritable(f"cannot write {path}: {exc}") from exc


def write_csv(path, columns, rows):
    """Write rows (dicts) under a fixed column order; returns the sha256.

    Missing cells render empty.  Quoting follows RFC 4180 (CRLF line
    ends, quotes only where needed).
    """
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\r\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([format_value(row.get(c)) for c in columns])
    data = buf.getvalue().encode("utf-8")
    _write_bytes(path, data)
    return hashlib.sha256(data).hexdigest()


def write_manifest(path, manifest):
    """Write the manifest as sorted, indented JSON."""
    data = (json.dumps(manifest, sort_keys=True, indent=2) + "\n").encode("utf-8")
    _write_bytes(path, data)


# ---------------------------------------------------------------------------
# SVG plotting

_W, _H = 560, 400
_ML, _MR, _MT, _MB = 72, 24, 46, 56
_POINT = "#2a6fdb"
_LINE = "#c0392b"
_INK = "#222222"
_FRAME = "#888888"


def emit_plot(fit, points, path, y_label="y"):
    """Write a standalone SVG: log-scaled scatter plus an optional fit.

    ``points`` are raw ``(x, y)`` pairs (positive); with a ScalingFit
    they are drawn in its transformed abscissa and the fitted line and
    slope annotation are added.  A single point degrades to a bare
    scatter.  The fitted line is the only ``<line>`` element in the
    file.

    Raises TooFewPoints for an empty point list, NonpositiveData when a
    coordinate cannot be log-scaled, and OutputUnwritable on I/O
    failure.
    """
    pts = [(float(x), float(y)) for x, y in points]
    if not pts:
        raise TooFewPoints("emit_plot needs at least one point")
    transform = fit.x_transform if fit is not None else "ln x"
    if any(x <= 0.0 or y <= 0.0 for x, y in pts):
        raise NonpositiveData("emit_plot needs positive coordinates")
    if transform == "ln ln(1/x)":
        if any(x >= 1.0 for x, _ in pts):
            raise NonpositiveData("ln ln(1/x) needs x < 1")
        ts = [math.log(math.log(1.0 / x)) for x, _ in pts]
    else:
        ts = [math.log(x) for x, _ in pts]
    ws = [math.log(y) for _, y in pts]

    def padded(lo, hi):
        if hi - lo < 1e-12:
            return lo - 0.5, hi + 0.5
        pad = 0.08 * (hi - lo)
        return lo - pad, hi + pad

    t_lo, t_hi = padded(min(ts), max(ts))
    w_lo, w_hi = padded(min(ws), max(ws))

    def sx(t):
        return _ML + (t - t_lo) / (t_hi - t_lo) * (_W - _ML - _MR)

    def sy(w):
        return _H - _MB - (w - w_lo) / (w_hi - w_lo) * (_H - _MT - _MB)

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {_W} {_H}" '
        f'font-family="sans-serif" font-size="12">',
        f'<rect x="0" y="0" width="{_W}" height="{_H}" fill="white"/>',
        f'<rect x="{_ML}" y="{_MT}" width="{_W - _ML - _MR}" '
        f'height="{_H - _MT - _MB}" fill="none" stroke="{_FRAME}"/>',
    ]
    if fit is not None:
        parts.append(
            f'<text x="{_ML}" y="{_MT - 14}" fill="{_INK}" font-size="14">'
            f"slope = {fit.slope:.2f}   (r&#178; = {fit.r_squared:.3f})</text>"
        )
        y0 = fit.intercept + fit.slope * t_lo
        y1 = fit.intercept + fit.slope * t_hi
        parts.append(
            f'<line x1="{sx(t_lo):.2f}" y1="{sy(y0):.2f}" '
            f'x2="{sx(t_hi):.2f}" y2="{sy(y1):.2f}" '
            f'stroke="{_LINE}" stroke-width="1.5"/>'
        )
    for t, w in zip(ts, ws):
        parts.append(
            f'<circle cx="{sx(t):.2f}" cy="{sy(w):.2f}" r="4" '
            f'fill="{_POINT}" fill-opacity="0.85"/>'
        )

    # corner tick labels carry the raw data range; axes are log-scaled
    xs = [x for x, _ in pts]
    ys = [y for _, y in pts]
    y_mid = (_MT + _H - _MB) / 2
    parts.extend(
        [
            f'<text x="{_ML}" y="{_H - _MB + 16}" fill="{_INK}">'
            f"{min(xs):.4g}</text>",
            f'<text x="{_W - _MR}" y="{_H - _MB + 16}" fill="{_INK}" '
            f'text-anchor="end">{max(xs):.4g}</text>',
            f'<text x="{_ML - 6}" y="{_H - _MB}" fill="{_INK}" '
            f'text-anchor="end">{min(ys):.4g}</text>',
            f'<text x="{_ML - 6}" y="{_MT + 12}" fill="{_INK}" '
            f'text-anchor="end">{max(ys):.4g}</text>',
            f'<text x="{(_ML + _W - _MR) / 2}" y="{_H - 16}" fill="{_INK}" '
            f'text-anchor="middle">x   [{transform}]</text>',
            f'<text x="16" y="{y_mid}" fill="{_INK}" text-anchor="middle" '
            f'transform="rotate(-90 16 {y_mid})">{y_label}   [ln y]</text>',
            "</svg>",
        ]
    )
    _write_bytes(path, "\n".join(parts).encode("utf-8"))
