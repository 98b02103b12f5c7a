"""Minimal deterministic SVG line/scatter charts for the sweep CSVs.

Hand-rolled on purpose: byte-stable output with no plotting dependency. The
CSVs remain the source of truth; these are convenience renderings.
"""

import math

_W, _H = 640, 440
_ML, _MR, _MT, _MB = 70, 20, 40, 55
_COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")


def _ticks(lo, hi, count=5):
    if lo == hi:
        return [lo]
    span = hi - lo
    step = 10 ** math.floor(math.log10(span / count))
    for mult in (1, 2, 5, 10):
        if span / (step * mult) <= count:
            step *= mult
            break
    start = math.ceil(lo / step) * step
    ticks = []
    t = start
    while t <= hi + 1e-12 * span:
        ticks.append(t)
        t += step
    return ticks


def _fmt(v):
    if v == 0:
        return "0"
    if abs(v) >= 1e4 or abs(v) < 1e-3:
        return "%.1e" % v
    return ("%.6f" % v).rstrip("0").rstrip(".")


class _Scale:
    def __init__(self, lo, hi, out_lo, out_hi, log):
        self.log = log
        if log:
            lo, hi = math.log10(lo), math.log10(hi)
        if lo == hi:
            lo, hi = lo - 0.5, hi + 0.5
        self.lo, self.hi = lo, hi
        self.out_lo, self.out_hi = out_lo, out_hi

    def __call__(self, v):
        if self.log:
            v = math.log10(v)
        frac = (v - self.lo) / (self.hi - self.lo)
        return self.out_lo + frac * (self.out_hi - self.out_lo)


def line_chart(path, series, title="", x_label="", y_label="", log_x=False, log_y=False,
               markers=True):
    """Write one SVG with a polyline (plus dots) per (name, xs, ys) series."""
    all_x = [v for _, xs, _ in series for v in xs]
    all_y = [v for _, _, ys in series for v in ys]
    if log_x:
        all_x = [v for v in all_x if v > 0]
    if log_y:
        all_y = [v for v in all_y if v > 0]
    sx = _Scale(min(all_x), max(all_x), _ML, _W - _MR, log_x)
    sy = _Scale(min(all_y), max(all_y), _H - _MB, _MT, log_y)
    out = [
        '<svg xmlns="http://www.w3.org/2000/svg" width="%d" height="%d" '
        'font-family="sans-serif" font-size="12">' % (_W, _H),
        '<rect width="%d" height="%d" fill="white"/>' % (_W, _H),
        '<text x="%d" y="22" font-size="15" text-anchor="middle">%s</text>'
        % (_W // 2, title),
    ]
    xt = [10**t for t in _ticks(sx.lo, sx.hi)] if log_x else _ticks(sx.lo, sx.hi)
    yt = [10**t for t in _ticks(sy.lo, sy.hi)] if log_y else _ticks(sy.lo, sy.hi)
    for t in xt:
        px = sx(t)
        out.append(
            '<line x1="%.2f" y1="%d" x2="%.2f" y2="%d" stroke="#ddd"/>'
            % (px, _MT, px, _H - _MB)
        )
        out.append(
            '<text x="%.2f" y="%d" text-anchor="middle">%s</text>'
            % (px, _H - _MB + 18, _fmt(t))
        )
    for t in yt:
        py = sy(t)
        out.append(
            '<line x1="%d" y1="%.2f" x2="%d" y2="%.2f" stroke="#ddd"/>'
            % (_ML, py, _W - _MR, py)
        )
        out.append(
            '<text x="%d" y="%.2f" text-anchor="end" dy="4">%s</text>'
            % (_ML - 6, py, _fmt(t))
        )
    out.append(
        '<rect x="%d" y="%d" width="%d" height="%d" fill="none" stroke="black"/>'
        % (_ML, _MT, _W - _ML - _MR, _H - _MT - _MB)
    )
    out.append(
        '<text x="%d" y="%d" text-anchor="middle">%s</text>'
        % ((_ML + _W - _MR) // 2, _H - 12, x_label)
    )
    out.append(
        '<text x="16" y="%d" text-anchor="middle" transform="rotate(-90 16 %d)">%s</text>'
        % ((_MT + _H - _MB) // 2, (_MT + _H - _MB) // 2, y_label)
    )
    for si, (name, xs, ys) in enumerate(series):
        color = _COLORS[si % len(_COLORS)]
        pts = " ".join("%.2f,%.2f" % (sx(x), sy(y)) for x, y in zip(xs, ys))
        out.append(
            '<polyline points="%s" fill="none" stroke="%s" stroke-width="1.5"/>'
            % (pts, color)
        )
        if markers:
            for x, y in zip(xs, ys):
                out.append(
                    '<circle cx="%.2f" cy="%.2f" r="3" fill="%s"/>' % (sx(x), sy(y), color)
                )
        out.append(
            '<text x="%d" y="%d" fill="%s">%s</text>'
            % (_W - _MR - 160, _MT + 16 + 16 * si, color, name)
        )
    out.append("</svg>")
    with open(path, "w") as fh:
        fh.write("\n".join(out) + "\n")
