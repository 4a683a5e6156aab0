"""Regenerate the committed fixture CSVs under tests/fixtures/.

Run from the repo root:  python -m tests.make_fixtures
Outputs are deterministic; tests and the acceptance suite consume the
committed files, and this script documents exactly how they were built.
"""

from __future__ import annotations

import math
from datetime import datetime, timedelta, timezone
from pathlib import Path

from esmkit.esmsim import EsmParams, simulate_bars
from esmkit.marketdata import Bar, write_bar_csv

OUT = Path(__file__).parent / "fixtures"
T0 = datetime(2025, 2, 14, 14, 30, tzinfo=timezone.utc)


def flow_bars(neds, closes=None, start=T0, volume=1000.0, spread=1.0, minutes=1,
              degenerate=False):
    """Bars with recorded flows matching ``neds`` exactly; closes optional.

    With ``degenerate`` every bar collapses to o=h=l=c, so the high/low
    extrema streams coincide with the close path.
    """
    bars = []
    prev_close = closes[0] if closes else 100.0
    for i, x in enumerate(neds):
        c = closes[i] if closes else prev_close * (1 + 0.002 * x)
        o = c if degenerate else prev_close
        h = max(o, c) + spread
        l = min(o, c) - spread
        bars.append(
            Bar(
                timestamp=start + timedelta(minutes=i * minutes),
                open=o, high=h, low=l, close=c, volume=volume,
                buy_volume=volume * (1 + x) / 2, sell_volume=volume * (1 - x) / 2,
            )
        )
        prev_close = c
    return bars


def trend(direction: float):
    params = EsmParams(h_gain=1.5, ned_path=lambda t: direction * 0.8, dt=1e-3)
    return simulate_bars(params, 64, substeps=5, start=T0)


def rise_fall(sign: float):
    """Piecewise path: global close extreme exactly at the switch bar."""
    switch = 32

    def path(t):
        step = round(t / 1e-3)
        return sign * (0.6 if step < switch * 5 else -0.6)

    params = EsmParams(h_gain=1.5, ned_path=path, dt=1e-3)
    return simulate_bars(params, 64, substeps=5, start=T0)


def divergence():
    """Downtrend, a deeper imbalance trough on a higher price low, recovery.

    The first eight bars carry the hand-traced divergence pattern (S2 pair,
    then one S3 at bar 7); the zigzag recovery extends the series far enough
    to replay against a 15-bar coarse window. Degenerate bars (o=h=l=c) keep
    the price extrema streams identical to the close path.
    """
    prices = [100.0, 104.0, 98.0, 102.0, 96.0, 101.0, 97.0, 103.0]
    neds = [0.3, 0.5, 0.1, 0.3, -0.1, 0.2, -0.3, 0.2]
    for i in range(40):
        seg, ph = divmod(i, 6)
        base = 99.0 + 2.0 * seg
        prices.append(base + (0.8 * ph if ph < 4 else 0.8 * 4 - 1.2 * (ph - 4)))
        neds.append(min(0.9, 0.15 + 0.01 * i + (0.25 if ph < 4 else -0.15)))
    return flow_bars(neds, closes=prices, spread=0.0, degenerate=True)


def nested_waves():
    """Rising sawtooth staircase whose segments straddle two coarse bars.

    Both the 1-bar series and its 15-bar resample show rising peak/trough
    ladders, so trend confirmations fire at both scales near the same
    segment boundaries.
    """
    closes = []
    neds = []
    for i in range(360):
        seg, ph = divmod(i, 33)
        base = 100.0 + 1.2 * seg
        if ph < 27:
            c = base + 0.09 * ph
            x = 0.45
        else:
            c = base + 0.09 * 27 - 0.28 * (ph - 27)
            x = -0.35
        closes.append(c)
        neds.append(min(0.9, x + 0.0012 * i))
    return flow_bars(neds, closes=closes, spread=0.02)


def intraday_sessions():
    """Three one-hour sessions on separate days with very different ranges."""
    bars = []
    amplitudes = (0.2, 2.0, 0.6)
    for day, amp in enumerate(amplitudes):
        start = T0 + timedelta(days=day)
        for i in range(60):
            x = 0.7 * math.sin(2 * math.pi * i / 20.0)
            c = 100.0 + amp * math.sin(2 * math.pi * i / 60.0)
            o = c - 0.05
            bars.append(
                Bar(
                    timestamp=start + timedelta(minutes=i),
                    open=o, high=max(o, c) + 0.02 * amp, low=min(o, c) - 0.02 * amp,
                    close=c, volume=500.0,
                    buy_volume=250.0 * (1 + x), sell_volume=250.0 * (1 - x),
                )
            )
    return bars


FIXTURES = {
    "trend_up.csv": lambda: trend(+1.0),
    "trend_down.csv": lambda: trend(-1.0),
    "rise_fall.csv": lambda: rise_fall(+1.0),
    "fall_rise.csv": lambda: rise_fall(-1.0),
    "divergence.csv": divergence,
    "nested_waves.csv": nested_waves,
    "intraday_sessions.csv": intraday_sessions,
}


def main() -> None:
    OUT.mkdir(parents=True, exist_ok=True)
    for name, build in FIXTURES.items():
        path = OUT / name
        with open(path, "w", encoding="utf-8") as fh:
            write_bar_csv(build(), fh)
        print(f"wrote {path}")


if __name__ == "__main__":
    main()
