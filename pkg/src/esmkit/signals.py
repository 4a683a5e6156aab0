"""Directional signals from paired price and imbalance extrema.

Six rules watch the last two confirmed extrema of four streams (price highs,
price lows, imbalance peaks, imbalance troughs): trend confirmation when all
streams rise or fall together (S1/S2), divergence reversals when price and
imbalance extrema disagree (S3/S4), and informed-flow warnings when the
imbalance reading at a retested high or low drops or jumps (S5/S6). An
extremum over a +/-k window confirms k bars after its center; every rule
fires at the bar where its newest evidence confirms, never retroactively.
"""

from __future__ import annotations

from dataclasses import dataclass
from datetime import datetime
from enum import Enum, IntEnum
from typing import IO, Sequence

import numpy as np

from . import kernels
from .marketdata import Bar, Timeframe, format_ts, infer_bar_period
from .nedcore import NedSeries
from .states import MarketState
from .turningpoints import TpDirection, TurningPointForecast


class SignalKind(IntEnum):
    S1_UPTREND = 1
    S2_DOWNTREND = 2
    S3_REVERSE_UP = 3
    S4_REVERSE_DOWN = 4
    S5_INFORMED_SELLING = 5
    S6_INFORMED_BUYING = 6

    @property
    def bullish(self) -> bool:
        return self in (SignalKind.S1_UPTREND, SignalKind.S3_REVERSE_UP,
                        SignalKind.S6_INFORMED_BUYING)

    @property
    def short_name(self) -> str:
        return f"S{int(self)}"


# Severity classes for outlook tie-breaking: reversal divergences outrank
# informed-flow warnings, which outrank trend confirmations.
_SEVERITY = {3: 0, 4: 0, 5: 1, 6: 1, 1: 2, 2: 2}


class ExtremumKind(Enum):
    PEAK = "peak"
    TROUGH = "trough"


class SeriesRole(Enum):
    PRICE_HIGH = "price-high"
    PRICE_LOW = "price-low"
    NED = "ned"


@dataclass(frozen=True, slots=True)
class Extremum:
    index: int
    kind: ExtremumKind
    value: float
    series: SeriesRole
    confirmed_at: int
    at: datetime | None = None


@dataclass(frozen=True, slots=True)
class SignalEvent:
    kind: SignalKind
    at: datetime
    timeframe: Timeframe
    bar_index: int
    evidence: tuple[int, ...]
    strength: float


@dataclass(frozen=True, slots=True)
class DetectorConfig:
    """Thresholds for extremum confirmation and rule tolerances.

    ``k`` is the extremum half-window; ``eps_price`` the relative price
    tolerance; ``eps_ned`` the absolute imbalance tolerance; ``pair_window``
    the max bar distance to pair an imbalance extremum with a price
    extremum; ``trend_lookback`` how long a downtrend stays "recent" for S3.
    """

    k: int = 2
    eps_price: float = 5e-4
    eps_ned: float = 0.02
    pair_window: int = 2
    trend_lookback: int = 20

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("k must be >= 1")
        if self.eps_price < 0 or self.eps_ned < 0:
            raise ValueError("tolerances must be >= 0")
        if self.pair_window < 0:
            raise ValueError("pair_window must be >= 0")
        if self.trend_lookback <= 2 * self.k:
            raise ValueError("trend_lookback must exceed 2*k")


class OutlookDirection(Enum):
    UP = "up"
    DOWN = "down"
    NEUTRAL = "neutral"

    def __str__(self) -> str:
        return self.value


@dataclass(frozen=True, slots=True)
class Outlook:
    at: datetime
    direction: OutlookDirection
    expected_state: int | None
    rationale: tuple[str, ...]


def find_extrema(series: Sequence[float], k: int, role: SeriesRole = SeriesRole.NED,
                 keep: ExtremumKind | None = None) -> list[Extremum]:
    """Confirmed local extrema of one series (see kernels.find_extrema)."""
    if k < 1:
        raise ValueError("k must be >= 1")
    values = np.asarray(series, dtype=np.float64)
    idx, kinds = kernels.find_extrema(values, k)
    out = []
    for i, kd in zip(idx, kinds):
        kind = ExtremumKind.PEAK if kd == kernels.PEAK else ExtremumKind.TROUGH
        if keep is not None and kind is not keep:
            continue
        out.append(
            Extremum(index=int(i), kind=kind, value=float(values[i]), series=role,
                     confirmed_at=int(i) + k)
        )
    return out


def detect_signals_arrays(
    highs, lows, neds, cfg: DetectorConfig
) -> list[tuple[int, int, float, tuple[int, ...]]]:
    """Raw rule evaluation over aligned arrays.

    Returns (bar_index, kind_number, strength, evidence_indices) tuples in
    bar order, kinds ascending within a bar.
    """
    highs = np.asarray(highs, dtype=np.float64)
    lows = np.asarray(lows, dtype=np.float64)
    neds = np.asarray(neds, dtype=np.float64)
    if not (len(highs) == len(lows) == len(neds)):
        raise ValueError("price and imbalance series must be aligned")
    return kernels.detect_fold(
        highs, lows, neds, cfg.k, cfg.eps_price, cfg.eps_ned,
        cfg.pair_window, cfg.trend_lookback,
    )


def detect_signals(
    price_bars: Sequence[Bar], ned: NedSeries, cfg: DetectorConfig | None = None
) -> list[SignalEvent]:
    """Evaluate the six rules over bars and their aligned imbalance series."""
    cfg = cfg or DetectorConfig()
    if len(price_bars) != len(ned.points):
        raise ValueError(
            f"{len(price_bars)} bars vs {len(ned.points)} imbalance points; "
            "series must be aligned one point per bar"
        )
    if not price_bars:
        return []
    period = infer_bar_period(price_bars, ned.timeframe)
    highs = [b.high for b in price_bars]
    lows = [b.low for b in price_bars]
    raw = detect_signals_arrays(highs, lows, ned.values(), cfg)
    return [
        SignalEvent(
            kind=SignalKind(kind),
            at=price_bars[t].timestamp + period,
            timeframe=ned.timeframe,
            bar_index=t,
            evidence=tuple(int(e) for e in evidence),
            strength=strength,
        )
        for t, kind, strength, evidence in raw
    ]


def _winning_signal(recent: Sequence[SignalEvent]) -> SignalEvent:
    """Most recent event wins; ties break by severity class then kind number."""
    return sorted(
        recent,
        key=lambda e: (-e.bar_index, _SEVERITY[int(e.kind)], int(e.kind)),
    )[0]


def combine_outlook(
    state: MarketState,
    recent_signals: Sequence[SignalEvent],
    tps: tuple[TurningPointForecast | None, TurningPointForecast | None],
    price: float,
    proximity: float = 5e-3,
) -> Outlook:
    """Merge state, recent signals, and turning levels into one directional call.

    A turning level within ``proximity`` of the price sets the base
    expectation; any recent directional signal overrides it (bullish kinds
    force up, bearish force down). The expected state moves by the flip
    magnitude of the nearest in-proximity level that agrees with the final
    direction; with no agreeing level the direction stands alone.
    """
    near: list[TurningPointForecast] = []
    for tp in tps:
        if tp is not None and tp.level is not None:
            if abs(tp.level - price) <= proximity * price:
                near.append(tp)
    near.sort(key=lambda tp: abs(tp.level - price))

    rationale: list[str] = []
    if recent_signals:
        winner = _winning_signal(recent_signals)
        direction = OutlookDirection.UP if winner.kind.bullish else OutlookDirection.DOWN
        rationale.append(winner.kind.short_name)
        for tp in near:
            wanted = TpDirection.UP_FLIP if direction is OutlookDirection.UP else TpDirection.DOWN_FLIP
            tag = "confirms" if tp.direction is wanted else "overrides"
            rationale.append(f"{tag}:{tp.kind}-{tp.direction}")
    elif near:
        direction = (
            OutlookDirection.UP
            if near[0].direction is TpDirection.UP_FLIP
            else OutlookDirection.DOWN
        )
        rationale.extend(f"{tp.kind}-{tp.direction}" for tp in near)
    else:
        return Outlook(at=state.at, direction=OutlookDirection.NEUTRAL,
                       expected_state=None, rationale=())

    wanted = (
        TpDirection.UP_FLIP if direction is OutlookDirection.UP else TpDirection.DOWN_FLIP
    )
    expected: int | None = None
    for tp in near:
        if tp.direction is wanted:
            shift = tp.kind.magnitude if direction is OutlookDirection.UP else -tp.kind.magnitude
            expected = min(8, max(1, state.index + shift))
            break
    return Outlook(at=state.at, direction=direction, expected_state=expected,
                   rationale=tuple(rationale))


def write_signal_csv(events: Sequence[SignalEvent], fh: IO[str]) -> None:
    fh.write("at,timeframe,kind,strength,evidence_indices\n")
    for e in events:
        ev = ";".join(str(i) for i in e.evidence)
        fh.write(f"{format_ts(e.at)},{e.timeframe},{e.kind.short_name},{e.strength!r},{ev}\n")


def write_outlook_csv(outlooks: Sequence[Outlook], fh: IO[str]) -> None:
    fh.write("at,direction,expected_state,rationale\n")
    for o in outlooks:
        exp = "" if o.expected_state is None else str(o.expected_state)
        fh.write(f"{format_ts(o.at)},{o.direction},{exp},{'|'.join(o.rationale)}\n")
