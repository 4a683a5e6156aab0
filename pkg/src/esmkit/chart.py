"""Deterministic SVG chart: price line, state band, signal markers, T2/T4 levels.

Pure-text rendering keeps the output diffable and byte-stable; there is no
drawing dependency. Coordinates are rounded to fixed precision so identical
logs always serialize identically.
"""

from __future__ import annotations

from .backtest import ReplayLog

WIDTH = 960
HEIGHT = 540
MARGIN = 48
BAND_H = 16

# One fill per state 1..8, pessimistic red through euphoric green.
STATE_FILLS = (
    "#a50026", "#d73027", "#f46d43", "#fdae61",
    "#a6d96a", "#66bd63", "#1a9850", "#006837",
)
SIGNAL_STYLE = {
    1: ("#1a9850", "up"), 2: ("#a50026", "down"), 3: ("#66bd63", "up"),
    4: ("#d73027", "down"), 5: ("#f46d43", "down"), 6: ("#a6d96a", "up"),
}


def _fmt(x: float) -> str:
    return f"{x:.2f}"


def render_chart(log: ReplayLog) -> str:
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}">',
        f'<rect width="{WIDTH}" height="{HEIGHT}" fill="#ffffff"/>',
    ]
    plot_w = WIDTH - 2 * MARGIN
    plot_h = HEIGHT - 2 * MARGIN - BAND_H
    parts.append(
        f'<rect x="{MARGIN}" y="{MARGIN}" width="{plot_w}" height="{plot_h}" '
        f'fill="none" stroke="#888888" stroke-width="1"/>'
    )

    n = len(log.fine_bars)
    if n == 0:
        parts.append("</svg>")
        return "\n".join(parts) + "\n"

    closes = [b.close for b in log.fine_bars]
    levels = [
        tp.level
        for pair in log.tps
        for tp in pair
        if tp.level is not None
    ]
    lo = min(min(b.low for b in log.fine_bars), *(levels or [closes[0]]))
    hi = max(max(b.high for b in log.fine_bars), *(levels or [closes[0]]))
    if hi <= lo:
        hi = lo + 1.0

    def x(i: int) -> float:
        return MARGIN + (plot_w * i / max(1, n - 1))

    def y(price: float) -> float:
        return MARGIN + plot_h * (1.0 - (price - lo) / (hi - lo))

    # price axis labels
    for frac in (0.0, 0.5, 1.0):
        p = lo + frac * (hi - lo)
        parts.append(
            f'<text x="{MARGIN - 6}" y="{_fmt(y(p) + 4)}" font-size="11" '
            f'text-anchor="end" fill="#444444">{p:.2f}</text>'
        )

    # state band under the plot
    band_y = HEIGHT - MARGIN - BAND_H
    cell = plot_w / n
    for i, st in enumerate(log.states):
        parts.append(
            f'<rect x="{_fmt(MARGIN + i * cell)}" y="{band_y}" width="{_fmt(cell)}" '
            f'height="{BAND_H}" fill="{STATE_FILLS[st.index - 1]}">'
            f"<title>state {st.index}</title></rect>"
        )

    # T2/T4 level step lines
    for slot, (dash, color) in enumerate((("4 3", "#7570b3"), ("7 4", "#e7298a"))):
        pts = []
        for i, pair in enumerate(log.tps):
            tp = pair[slot]
            if tp.level is not None:
                pts.append(f"{_fmt(x(i))},{_fmt(y(tp.level))}")
        if pts:
            parts.append(
                f'<polyline points="{" ".join(pts)}" fill="none" stroke="{color}" '
                f'stroke-width="1" stroke-dasharray="{dash}"/>'
            )

    # price line
    line = " ".join(f"{_fmt(x(i))},{_fmt(y(c))}" for i, c in enumerate(closes))
    parts.append(
        f'<polyline points="{line}" fill="none" stroke="#222222" stroke-width="1.5"/>'
    )

    # signal markers
    for ev in log.signals:
        color, orient = SIGNAL_STYLE[int(ev.kind)]
        cx = x(ev.bar_index)
        cy = y(closes[ev.bar_index])
        if orient == "up":
            d = f"M {_fmt(cx)} {_fmt(cy - 10)} l -5 9 l 10 0 z"
        else:
            d = f"M {_fmt(cx)} {_fmt(cy + 10)} l -5 -9 l 10 0 z"
        parts.append(
            f'<path d="{d}" fill="{color}" class="signal-marker">'
            f"<title>{ev.kind.short_name}</title></path>"
        )

    parts.append("</svg>")
    return "\n".join(parts) + "\n"
