"""Minimal SVG line charts from sweep CSV files.

Curves are keyed by (estimator, basis, solver). MSE points are the mean of
per-trial linear MSE shown in dB; BER is drawn on a log axis.
"""
from collections import defaultdict
import math
from xml.sax.saxutils import escape

from .sweep import read_csv

_COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b",
           "#e377c2", "#17becf", "#7f7f7f", "#bcbd22")
_BER_FLOOR = 1e-6


def curves_from_rows(rows, metric="mse_db"):
    """``{label: [(x, y), ...]}`` with points sorted by axis value."""
    acc = defaultdict(lambda: defaultdict(list))
    for r in rows:
        label = "/".join((r["estimator"], r["basis"], r["solver"]))
        val = r[metric]
        if val == "":
            continue
        acc[label][float(r["axis_value"])].append(float(val))
    out = {}
    for label, per_x in acc.items():
        pts = []
        for x in sorted(per_x):
            ys = per_x[x]
            if metric == "mse_db":
                lin = sum(10 ** (y / 10) for y in ys) / len(ys)
                pts.append((x, 10 * math.log10(lin)))
            else:
                pts.append((x, sum(ys) / len(ys)))
        out[label] = pts
    return out


def _ticks(lo, hi, n=5):
    if hi <= lo:
        return [lo]
    raw = (hi - lo) / n
    mag = 10 ** math.floor(math.log10(raw))
    step = min((s * mag for s in (1, 2, 5, 10) if s * mag >= raw), default=raw)
    t = math.ceil(lo / step) * step
    out = []
    while t <= hi + 1e-9 * step:
        out.append(round(t, 10))
        t += step
    return out


def svg_chart(curves, xlabel, ylabel, log_y=False, width=640, height=420):
    """Render ``curves`` as an SVG document string."""
    if not curves:
        raise ValueError("nothing to plot")
    left, right, top, bottom = 70, 190, 20, 50
    pw, ph = width - left - right, height - top - bottom

    def ty(y):
        return math.log10(max(y, _BER_FLOOR)) if log_y else y

    xs = [x for pts in curves.values() for x, _ in pts]
    ys = [ty(y) for pts in curves.values() for _, y in pts]
    x0, x1 = min(xs), max(xs)
    y0, y1 = min(ys), max(ys)
    if x1 == x0:
        x0, x1 = x0 - 1, x1 + 1
    if y1 == y0:
        y0, y1 = y0 - 1, y1 + 1
    if log_y:
        y0, y1 = math.floor(y0), math.ceil(y1)

    def px(x):
        return left + (x - x0) / (x1 - x0) * pw

    def py(y):
        return top + (1 - (ty(y) - y0) / (y1 - y0)) * ph

    el = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
          f'font-family="sans-serif" font-size="11">',
          f'<rect x="{left}" y="{top}" width="{pw}" height="{ph}" fill="none" stroke="#444"/>']
    for t in _ticks(x0, x1):
        X = px(t)
        el.append(f'<line x1="{X:.1f}" y1="{top + ph}" x2="{X:.1f}" y2="{top + ph + 4}" stroke="#444"/>')
        el.append(f'<text x="{X:.1f}" y="{top + ph + 16}" text-anchor="middle">{t:g}</text>')
    yt = range(int(y0), int(y1) + 1) if log_y else _ticks(y0, y1)
    for t in yt:
        Y = top + (1 - (t - y0) / (y1 - y0)) * ph
        lab = f"1e{t}" if log_y else f"{t:g}"
        el.append(f'<line x1="{left - 4}" y1="{Y:.1f}" x2="{left + pw}" y2="{Y:.1f}" stroke="#ddd"/>')
        el.append(f'<text x="{left - 6}" y="{Y + 4:.1f}" text-anchor="end">{lab}</text>')
    el.append(f'<text x="{left + pw / 2}" y="{height - 12}" text-anchor="middle">{escape(xlabel)}</text>')
    el.append(f'<text transform="translate(16,{top + ph / 2}) rotate(-90)" text-anchor="middle">'
              f'{escape(ylabel)}</text>')
    for n, (label, pts) in enumerate(sorted(curves.items())):
        c = _COLORS[n % len(_COLORS)]
        path = " ".join(f"{px(x):.1f},{py(y):.1f}" for x, y in pts)
        el.append(f'<polyline points="{path}" fill="none" stroke="{c}" stroke-width="1.6"/>')
        for x, y in pts:
            el.append(f'<circle cx="{px(x):.1f}" cy="{py(y):.1f}" r="2.5" fill="{c}"/>')
        ly = top + 10 + 16 * n
        el.append(f'<line x1="{left + pw + 12}" y1="{ly}" x2="{left + pw + 32}" y2="{ly}" '
                  f'stroke="{c}" stroke-width="2"/>')
        el.append(f'<text x="{left + pw + 36}" y="{ly + 4}">{escape(label)}</text>')
    el.append("</svg>\n")
    return "\n".join(el)


def plot_csv(in_path, out_path, metric="mse_db"):
    """Read a sweep CSV and write one SVG chart of ``metric``."""
    if metric not in ("mse_db", "ber", "ref_ber"):
        raise ValueError(f"unknown metric {metric!r}")
    rows = read_csv(in_path)
    if not rows:
        raise ValueError(f"{in_path}: no data rows")
    curves = curves_from_rows(rows, metric)
    ylabel = {"mse_db": "MSE [dB]", "ber": "BER", "ref_ber": "known-channel BER"}[metric]
    svg = svg_chart(curves, rows[0]["axis"], ylabel, log_y=metric != "mse_db")
    with open(out_path, "w", encoding="utf-8") as fh:
        fh.write(svg)
    return out_path
