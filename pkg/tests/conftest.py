"""Shared builders for the test suite."""

from __future__ import annotations

from datetime import datetime, timedelta, timezone
from pathlib import Path

import pytest

from esmkit.marketdata import Bar

T0 = datetime(2025, 2, 14, 14, 30, tzinfo=timezone.utc)
FIXTURES = Path(__file__).parent / "fixtures"


def mkbar(
    i: int = 0,
    o: float = 100.0,
    h: float | None = None,
    l: float | None = None,
    c: float | None = None,
    v: float = 1000.0,
    buy: float | None = None,
    sell: float | None = None,
    minutes: int = 1,
    t0: datetime = T0,
) -> Bar:
    """Bar with sane defaults: flat unless high/low/close given."""
    c = o if c is None else c
    h = max(o, c) if h is None else h
    l = min(o, c) if l is None else l
    return Bar(
        timestamp=t0 + timedelta(minutes=i * minutes),
        open=o, high=h, low=l, close=c, volume=v,
        buy_volume=buy, sell_volume=sell,
    )


def flow_bar(i: int, ned: float, v: float = 1000.0, price: float = 100.0,
             minutes: int = 1) -> Bar:
    """Bar whose recorded flow split gives exactly the requested imbalance."""
    return mkbar(i, o=price, v=v, buy=v * (1 + ned) / 2, sell=v * (1 - ned) / 2,
                 minutes=minutes)


def random_candle_window(rng, n_fixed=3, solvable=True):
    """Random candle window; when solvable, the partial bar can flip the sum."""
    bars = []
    from esmkit.nedcore import candle_flow_proxy

    fixed_buy = fixed_sell = 0.0
    for i in range(n_fixed):
        o = float(rng.uniform(90, 110))
        c = float(rng.uniform(90, 110))
        h = max(o, c) + float(rng.uniform(0.1, 3))
        l = min(o, c) - float(rng.uniform(0.1, 3))
        v = float(rng.uniform(1, 60))
        bars.append(mkbar(i, o=o, h=h, l=l, c=c, v=v))
        split = candle_flow_proxy(bars[-1])
        fixed_buy += split.buy
        fixed_sell += split.sell
    o = float(rng.uniform(95, 105))
    h = o + float(rng.uniform(0.5, 4))
    l = o - float(rng.uniform(0.5, 4))
    c = float(rng.uniform(l + 1e-3, h - 1e-3))
    net = abs(fixed_buy - fixed_sell)
    v = net * float(rng.uniform(1.2, 3.0)) + float(rng.uniform(5, 50)) if solvable else 1e-6
    bars.append(mkbar(n_fixed, o=o, h=h, l=l, c=c, v=v))
    return bars


@pytest.fixture
def t0() -> datetime:
    return T0


@pytest.fixture
def fixtures_dir() -> Path:
    return FIXTURES
