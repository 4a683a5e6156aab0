"""Normalized excess demand: per-window buy/sell imbalance in [-1, +1].

The imbalance of a window is (buy - sell) / (buy + sell) of its aggregated
flow split. Splits come either from recorded buy/sell volumes (flow proxy)
or from candle geometry (candle proxy). Coarse windows always sum the
fine-bar splits, which makes the value independent of how the window was
grouped; re-deriving the candle proxy from an aggregated window candle is
available behind a flag for experimentation only.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from datetime import datetime
from enum import Enum
from typing import IO, Sequence

import numpy as np

from . import kernels
from .errors import ConfigError, UndefinedFlowError
from .marketdata import Bar, Timeframe, format_ts, infer_bar_period

logger = logging.getLogger(__name__)


class ProxyKind(Enum):
    FLOW = "flow"
    CANDLE = "candle"


@dataclass(frozen=True, slots=True)
class FlowSplit:
    """Aggressor volume split: ``buy`` measures demand, ``sell`` supply."""

    buy: float
    sell: float

    def __post_init__(self):
        if self.buy < 0 or self.sell < 0:
            raise ValueError("flow volumes must be >= 0")

    def __add__(self, other: "FlowSplit") -> "FlowSplit":
        return FlowSplit(self.buy + other.buy, self.sell + other.sell)


@dataclass(frozen=True, slots=True)
class NedPoint:
    window_end: datetime
    timeframe: Timeframe
    value: float
    window_flow: FlowSplit
    partial: bool = False


@dataclass(frozen=True, slots=True)
class NedSeries:
    timeframe: Timeframe
    points: tuple[NedPoint, ...]

    def __post_init__(self):
        for a, b in zip(self.points, self.points[1:]):
            if b.window_end <= a.window_end:
                raise ValueError("window_end must be strictly increasing")
        for p in self.points[:-1]:
            if p.partial:
                raise ValueError("only the final point may be partial")

    def values(self) -> list[float]:
        return [p.value for p in self.points]

    def __len__(self) -> int:
        return len(self.points)


def ned_from_flow(flow: FlowSplit) -> float:
    """Imbalance (buy - sell) / (buy + sell); undefined for zero total flow."""
    total = flow.buy + flow.sell
    if total <= 0:
        raise UndefinedFlowError("window has zero total flow")
    return (flow.buy - flow.sell) / total


def candle_flow_proxy(bar: Bar) -> FlowSplit:
    """Split a bar's volume by where it closed within its range.

    The buy fraction is (close - low) / (high - low); a zero-range bar
    splits evenly.
    """
    if bar.high > bar.low:
        f = (bar.close - bar.low) / (bar.high - bar.low)
    else:
        f = 0.5
    return FlowSplit(f * bar.volume, (1.0 - f) * bar.volume)


def bar_flow(bar: Bar, proxy: ProxyKind) -> FlowSplit:
    """One bar's flow split under the given proxy."""
    if proxy is ProxyKind.FLOW:
        if not bar.has_flow:
            raise ConfigError("flow proxy requires buy_volume/sell_volume columns")
        return FlowSplit(bar.buy_volume, bar.sell_volume)
    return candle_flow_proxy(bar)


def window_flow(bars: Sequence[Bar], proxy: ProxyKind) -> FlowSplit:
    """Component-wise sum of per-bar splits over one window."""
    if not bars:
        raise ValueError("window must contain at least one bar")
    buy = 0.0
    sell = 0.0
    for b in bars:
        split = bar_flow(b, proxy)
        buy += split.buy
        sell += split.sell
    return FlowSplit(buy, sell)


def flow_arrays(bars: Sequence[Bar], proxy: ProxyKind) -> tuple[np.ndarray, np.ndarray]:
    """Per-bar buy/sell arrays for a whole series (the vectorized hot path)."""
    n = len(bars)
    if proxy is ProxyKind.FLOW:
        if not all(b.has_flow for b in bars):
            raise ConfigError("flow proxy requires buy_volume/sell_volume columns")
        buy = np.fromiter((b.buy_volume for b in bars), dtype=np.float64, count=n)
        sell = np.fromiter((b.sell_volume for b in bars), dtype=np.float64, count=n)
        return buy, sell
    h = np.fromiter((b.high for b in bars), dtype=np.float64, count=n)
    lo = np.fromiter((b.low for b in bars), dtype=np.float64, count=n)
    c = np.fromiter((b.close for b in bars), dtype=np.float64, count=n)
    v = np.fromiter((b.volume for b in bars), dtype=np.float64, count=n)
    return kernels.candle_splits(h, lo, c, v)


def ned_series(
    bars: Sequence[Bar],
    target: Timeframe,
    proxy: ProxyKind,
    derive_from_coarse_candle: bool = False,
) -> NedSeries:
    """One imbalance point per target window over base-timeframe bars.

    The trailing window is emitted as partial when incomplete. Windows with
    zero total flow are omitted and logged: zero flow means "no trades",
    which is distinct from the balanced value 0. With
    ``derive_from_coarse_candle`` the candle proxy is re-derived from the
    aggregated window candle instead of summing fine splits (experimental;
    grouping-independence does not survive it).
    """
    mult = target.multiple
    if not bars:
        return NedSeries(timeframe=target, points=())
    period = infer_bar_period(bars, target)
    n = len(bars)
    bounds = list(range(0, n, mult)) + [n]

    if derive_from_coarse_candle and proxy is ProxyKind.CANDLE:
        buys, sells = _coarse_candle_flows(bars, bounds)
    else:
        buy_arr, sell_arr = flow_arrays(bars, proxy)
        buys = kernels.window_sums(buy_arr, bounds)
        sells = kernels.window_sums(sell_arr, bounds)

    points: list[NedPoint] = []
    for i in range(len(bounds) - 1):
        group_end = bounds[i + 1] - 1
        partial = (bounds[i + 1] - bounds[i]) < mult or bars[group_end].partial
        buy, sell = float(buys[i]), float(sells[i])
        window_end = bars[group_end].timestamp + period
        total = buy + sell
        if total <= 0:
            logger.info("omitting zero-flow window ending %s", format_ts(window_end))
            continue
        points.append(
            NedPoint(
                window_end=window_end,
                timeframe=target,
                value=(buy - sell) / total,
                window_flow=FlowSplit(buy, sell),
                partial=partial,
            )
        )
    return NedSeries(timeframe=target, points=tuple(points))


def _coarse_candle_flows(bars: Sequence[Bar], bounds: list[int]):
    """Candle splits re-derived from each window's aggregated candle."""
    buys = np.empty(len(bounds) - 1)
    sells = np.empty(len(bounds) - 1)
    for i in range(len(bounds) - 1):
        group = bars[bounds[i] : bounds[i + 1]]
        hi = max(b.high for b in group)
        lo = min(b.low for b in group)
        close = group[-1].close
        vol = sum(b.volume for b in group)
        f = (close - lo) / (hi - lo) if hi > lo else 0.5
        buys[i] = f * vol
        sells[i] = (1.0 - f) * vol
    return buys, sells


def write_ned_csv(series: NedSeries, fh: IO[str]) -> None:
    fh.write("window_end,timeframe,value,buy_volume,sell_volume,partial\n")
    for p in series.points:
        fh.write(
            f"{format_ts(p.window_end)},{p.timeframe},{p.value!r},"
            f"{p.window_flow.buy!r},{p.window_flow.sell!r},{int(p.partial)}\n"
        )
