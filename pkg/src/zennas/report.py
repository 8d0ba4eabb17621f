"""Tables and plots.

CSV is the primary output; SVG curves are drawn from the same rows, so every
plotted point is also in a table.  The SVG writer is a small hand-rolled
line plot with linear axes.
"""
from __future__ import annotations

import csv
import io
import json
import math
from xml.sax.saxutils import escape

from scipy.stats import kendalltau

SCORE_COLUMNS = ("arch_id", "proxy", "value", "std_error", "wall_time", "seed")
FIG2_COLUMNS = ("family", "parameter", "score", "with_bn", "value", "std_error", "overflowed")
THEOREM1_COLUMNS = ("depth", "batch", "resolution", "bhw", "ratio", "abs_deviation", "repeats")
#: bumped whenever a column set changes
SCHEMA_VERSION = 1


def fmt(v):
    """Stable text form for CSV cells (``inf``/``nan`` spelled out)."""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return repr(v)
    return str(v)


def rows_to_csv(rows, columns):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([fmt(r[c]) for c in columns])
    return buf.getvalue()


def rows_to_json(rows, columns):
    def clean(v):
        return fmt(v) if isinstance(v, float) and not math.isfinite(v) else v
    return json.dumps([{c: clean(r[c]) for c in columns} for r in rows], indent=1) + "\n"


def write_text(path, text):
    with open(path, "w") as fh:
        fh.write(text)


def kendall_matrix(table, proxies):
    """Kendall tau between every pair of proxies over their shared architectures.

    ``table`` maps ``(arch_id, proxy) -> value``.
    """
    out = []
    archs = sorted({a for a, _ in table})
    for p in proxies:
        for q in proxies:
            common = [a for a in archs if (a, p) in table and (a, q) in table
                      and math.isfinite(table[a, p]) and math.isfinite(table[a, q])]
            if len(common) < 2:
                tau = math.nan
            elif p == q:
                tau = 1.0
            else:
                tau = float(kendalltau([table[a, p] for a in common],
                                       [table[a, q] for a in common]).statistic)
            out.append({"proxy_a": p, "proxy_b": q, "kendall_tau": tau, "n": len(common)})
    return out


# --------------------------------------------------------------------------
# SVG

_PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")


def _ticks(lo, hi, n=5):
    if hi == lo:
        return [lo]
    return [lo + (hi - lo) * i / (n - 1) for i in range(n)]


def line_plot(series, title="", xlabel="", ylabel="", width=640, height=400):
    """SVG document with one polyline per ``name -> (xs, ys)`` entry.

    Non-finite points are left out of the lines and drawn as hollow markers
    on the top edge so overflowed points stay visible.
    """
    ml, mr, mt, mb = 70, 20, 40, 50
    pts = [(x, y) for xs, ys in series.values() for x, y in zip(xs, ys) if math.isfinite(y)]
    xs_all = [x for xs, _ in series.values() for x in xs]
    x0, x1 = (min(xs_all), max(xs_all)) if xs_all else (0.0, 1.0)
    y0, y1 = (min(p[1] for p in pts), max(p[1] for p in pts)) if pts else (0.0, 1.0)
    if x1 == x0:
        x0, x1 = x0 - 1, x1 + 1
    if y1 == y0:
        y0, y1 = y0 - 1, y1 + 1
    pw, ph = width - ml - mr, height - mt - mb

    def sx(x):
        return ml + (x - x0) / (x1 - x0) * pw

    def sy(y):
        return mt + (1 - (y - y0) / (y1 - y0)) * ph

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
           f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="12">',
           f'<rect width="{width}" height="{height}" fill="white"/>',
           f'<text x="{width / 2:.1f}" y="22" text-anchor="middle" font-size="14">{escape(title)}</text>',
           f'<line x1="{ml}" y1="{mt + ph}" x2="{ml + pw}" y2="{mt + ph}" stroke="black"/>',
           f'<line x1="{ml}" y1="{mt}" x2="{ml}" y2="{mt + ph}" stroke="black"/>']
    for t in _ticks(x0, x1):
        out.append(f'<text x="{sx(t):.1f}" y="{mt + ph + 16}" text-anchor="middle">{t:.4g}</text>')
    for t in _ticks(y0, y1):
        out.append(f'<text x="{ml - 6}" y="{sy(t) + 4:.1f}" text-anchor="end">{t:.4g}</text>')
    out.append(f'<text x="{ml + pw / 2:.1f}" y="{height - 10}" text-anchor="middle">{escape(xlabel)}</text>')
    out.append(f'<text x="16" y="{mt + ph / 2:.1f}" text-anchor="middle" '
               f'transform="rotate(-90 16 {mt + ph / 2:.1f})">{escape(ylabel)}</text>')
    for i, (name, (xs, ys)) in enumerate(series.items()):
        color = _PALETTE[i % len(_PALETTE)]
        finite = [(x, y) for x, y in zip(xs, ys) if math.isfinite(y)]
        if finite:
            path = " ".join(f"{sx(x):.2f},{sy(y):.2f}" for x, y in finite)
            out.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{path}"/>')
            for x, y in finite:
                out.append(f'<circle cx="{sx(x):.2f}" cy="{sy(y):.2f}" r="2.5" fill="{color}"/>')
        for x, y in zip(xs, ys):
            if not math.isfinite(y):
                out.append(f'<circle cx="{sx(x):.2f}" cy="{mt}" r="3.5" fill="none" stroke="{color}"/>')
        out.append(f'<text x="{ml + pw - 4}" y="{mt + 14 + 14 * i}" text-anchor="end" '
                   f'fill="{color}">{escape(str(name))}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
